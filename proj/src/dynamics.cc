#include "spf/dynamics.hh"

#include <cmath>

namespace spf {

blowup_error::blowup_error(double t_)
    : std::runtime_error("solution left the finite range at t = " +
                         std::to_string(t_)),
      t(t_) {}

spfnls_stepper::spfnls_stepper(const grid& g, const model_params& prm,
                               const noise_model& nm, double dt, scheme_t sch)
    : g_(&g), prm_(prm), nm_(nm), sigma_(nm.sigma),
      beta2_(nm.beta * nm.beta), dt_(dt), sch_(sch) {
    if (!(dt > 0.0)) throw std::invalid_argument("stepper: dt <= 0");
    check_same_grid(nm.phi, field(g));
    // Yoshida triple jump: stage weights w1,w0,w1 for the pointwise part and
    // averaged half-weights for the A multipliers between them.
    double w1 = 1.0 / (2.0 - std::cbrt(2.0));
    double w0 = 1.0 - 2.0 * w1;
    double ac[4] = {0.5 * w1, 0.5 * (w1 + w0), 0.5 * (w1 + w0), 0.5 * w1};
    double pc[3] = {w1, w0, w1};
    mA_edge.resize(g.n);
    mA_mid.resize(g.n);
    mA_full.resize(g.n);
    for (int j = 0; j < g.n; j++) {
        double lap = -4.0 * M_PI * M_PI * g.xi[j] * g.xi[j];
        double w = (lap - prm.nu);
        mA_edge[j] = std::polar(1.0, w * ac[0] * dt);
        mA_mid[j] = std::polar(1.0, w * ac[1] * dt);
        mA_full[j] = std::polar(1.0, w * dt);
    }
    for (int i = 0; i < 3; i++) {
        wdt[i] = pc[i] * dt;
        damp_p[i] = std::exp(-prm.eps * (prm.gamma - prm.mu) * 0.5 * wdt[i]);
        damp_q[i] = std::exp(-prm.eps * (prm.gamma + prm.mu) * 0.5 * wdt[i]);
    }
}

void spfnls_stepper::det_yoshida(field& u, fft_ws& ws) {
    for (int i = 0; i < 3; i++) {
        const std::vector<cplx>& m = (i == 0) ? mA_edge : mA_mid;
        ws.fwd(u);
        for (int j = 0; j < u.n(); j++) u.v[j] *= m[j];
        ws.bwd(u);
        for (int j = 0; j < u.n(); j++) {
            double p = u.v[j].real() * damp_p[i];
            double q = u.v[j].imag() * damp_q[i];
            double w = prm_.kappa * (p * p + q * q) * wdt[i];
            cplx z = cplx(p, q) * std::polar(1.0, w);
            u.v[j] = cplx(z.real() * damp_p[i], z.imag() * damp_q[i]);
        }
    }
    ws.fwd(u);
    for (int j = 0; j < u.n(); j++) u.v[j] *= mA_edge[j];
    ws.bwd(u);
}

void spfnls_stepper::det_em_stage(field& u, const field& W, fft_ws& ws) {
    const cplx I(0.0, 1.0);
    for (int j = 0; j < u.n(); j++) {
        cplx z = u.v[j];
        cplx nl = -prm_.eps * (prm_.gamma * z - prm_.mu * std::conj(z)) +
                  I * prm_.kappa * std::norm(z) * z -
                  0.5 * sigma_ * sigma_ * beta2_ * z;
        u.v[j] = z + dt_ * nl - I * sigma_ * z * W.v[j].real();
    }
    ws.fwd(u);
    for (int j = 0; j < u.n(); j++) u.v[j] *= mA_full[j];
    ws.bwd(u);
}

void spfnls_stepper::step(field& u, rng_stream& rs, fft_ws& ws) {
    field W = sample_increment(nm_, dt_, rs, ws);
    step_with(u, W, ws);
}

void spfnls_stepper::step_with(field& u, const field& W, fft_ws& ws) {
    if (sch_ == scheme_t::strang_exact_noise) {
        if (sigma_ != 0.0)
            for (int j = 0; j < u.n(); j++)
                u.v[j] *= std::polar(1.0, -sigma_ * W.v[j].real());
        det_yoshida(u, ws);
    } else {
        det_em_stage(u, W, ws);
    }
}

trajectory simulate(const field& u0, const model_params& prm,
                    const noise_model& nm, const stepper_config& cfg,
                    rng_stream& rs, fft_ws& ws, bool keep_states) {
    spfnls_stepper st(*u0.g, prm, nm, cfg.dt, cfg.scheme);
    int n_steps = int(std::llround(cfg.t_end / cfg.dt));
    int stride = cfg.record_stride > 0 ? cfg.record_stride : 1;
    trajectory tr;
    mixed_accum inf2(admissible_pair(infty, 2.0), cfg.dt);
    mixed_accum l66(admissible_pair(6.0, 6.0), cfg.dt);
    field u = u0;
    auto record = [&](double t) {
        tr.times.push_back(t);
        tr.l2.push_back(lp_norm(u, 2.0));
        tr.h1.push_back(hs_norm(u, 1.0, ws));
        tr.h2.push_back(hs_norm(u, 2.0, ws));
        tr.mixed_inf2.push_back(inf2.value());
        tr.mixed_66.push_back(l66.value());
        if (keep_states) tr.states.push_back(u);
    };
    inf2.add(u);
    l66.add(u);
    record(0.0);
    for (int n = 0; n < n_steps; n++) {
        st.step(u, rs, ws);
        if (!all_finite(u)) {
            tr.blowup = true;
            tr.blowup_t = (n + 1) * cfg.dt;
            break;
        }
        inf2.add(u);
        l66.add(u);
        if ((n + 1) % stride == 0 || n + 1 == n_steps) record((n + 1) * cfg.dt);
    }
    return tr;
}

std::vector<double> conservation_balance(const trajectory& traj,
                                         const model_params& prm) {
    if (traj.states.size() != traj.times.size())
        throw std::invalid_argument("conservation balance needs kept states");
    size_t m = traj.times.size();
    std::vector<double> r(m, 0.0);
    std::vector<double> l2sq(m), re2(m);
    for (size_t i = 0; i < m; i++) {
        const field& u = traj.states[i];
        double a = 0.0, b = 0.0;
        for (const cplx& z : u.v) {
            a += std::norm(z);
            b += (z * z).real();
        }
        l2sq[i] = a * u.dx();
        re2[i] = b * u.dx();
    }
    double acc = 0.0;
    for (size_t i = 0; i < m; i++) {
        if (i > 0) {
            double h = traj.times[i] - traj.times[i - 1];
            double fa = prm.gamma * l2sq[i - 1] - prm.mu * re2[i - 1];
            double fb = prm.gamma * l2sq[i] - prm.mu * re2[i];
            acc += 0.5 * h * (fa + fb);
        }
        r[i] = l2sq[i] - l2sq[0] + 2.0 * prm.eps * acc;
    }
    return r;
}

}  // namespace spf
