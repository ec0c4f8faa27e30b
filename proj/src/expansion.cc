#include "spf/expansion.hh"

#include <cmath>

namespace spf {

uint64_t checksum_consume(uint64_t h, uint64_t step, uint64_t tag) {
    uint64_t x = step * 0x9E3779B97F4A7C15ULL ^ (tag + 0xD6E8FEB86659FD93ULL);
    x ^= x >> 32;
    x *= 0xD6E8FEB86659FD93ULL;
    x ^= x >> 32;
    return (h ^ x) * 0x100000001B3ULL;
}

static noise_model with_sigma(const noise_model& nm, double sigma) {
    noise_model out = nm;
    out.sigma = sigma;
    return out;
}

expansion_runner::expansion_runner(const solitary_wave& wave,
                                   const lin_pack& pack,
                                   const noise_model& nm, double dt,
                                   double sigma)
    : wave_(&wave), pack_(&pack), nm_(nm), dt_(dt), sigma_(sigma),
      beta2_(nm.beta * nm.beta),
      ustep_(*wave.u_star.g, wave.prm, with_sigma(nm, sigma), dt,
             scheme_t::strang_exact_noise),
      lstep_(*wave.u_star.g, wave, dt), checksum_(1469598103934665603ULL),
      nstep_(0) {}

field expansion_runner::forcing(const field& v1) const {
    const field& us = wave_->u_star;
    field out(*v1.g);
    const cplx I(0.0, 1.0);
    double k = wave_->prm.kappa;
    for (int j = 0; j < v1.n(); j++) {
        cplx v = v1.v[j], u = us.v[j];
        out.v[j] = I * k * (2.0 * std::norm(v) * u + v * v * std::conj(u)) -
                   0.5 * beta2_ * u;
    }
    return out;
}

void expansion_runner::step(field& u, expansion_state& st, rng_stream& rs,
                            fft_ws& ws) {
    field W = sample_increment(nm_, dt_, rs, ws);
    step_with(u, st, W, ws);
}

void expansion_runner::step_with(field& u, expansion_state& st, const field& W,
                                 fft_ws& ws) {
    const field& us = wave_->u_star;
    const cplx I(0.0, 1.0);
    // a detached u (no grid) skips the u stage; the consumption slot is still
    // charged so the checksum fingerprints one fixed order
    if (u.g != nullptr) ustep_.step_with(u, W, ws);
    checksum_ = checksum_consume(checksum_, nstep_, 1);
    {
        field f = forcing(st.v1);
        for (int j = 0; j < st.v2.n(); j++) {
            double w = W.v[j].real();
            st.v2.v[j] += -I * st.v1.v[j] * w -
                          0.5 * us.v[j] * (w * w - beta2_ * dt_) +
                          0.5 * dt_ * f.v[j];
        }
    }
    checksum_ = checksum_consume(checksum_, nstep_, 2);
    for (int j = 0; j < st.v1.n(); j++)
        st.v1.v[j] += -I * us.v[j] * W.v[j].real();
    checksum_ = checksum_consume(checksum_, nstep_, 3);
    lstep_.step(st.v1, ws);
    checksum_ = checksum_consume(checksum_, nstep_, 4);
    lstep_.step(st.v2, ws);
    checksum_ = checksum_consume(checksum_, nstep_, 5);
    {
        field f = forcing(st.v1);
        for (int j = 0; j < st.v2.n(); j++) st.v2.v[j] += 0.5 * dt_ * f.v[j];
    }
    checksum_ = checksum_consume(checksum_, nstep_, 6);
    st.t += dt_;
    nstep_++;
}

void compute_residuals(const field& u, const expansion_state& st,
                       const solitary_wave& wave, double sigma, field& z,
                       field& z_prime) {
    z = field(*u.g);
    z_prime = field(*u.g);
    double s2 = sigma * sigma;
    for (int j = 0; j < u.n(); j++) {
        cplx base = u.v[j] - wave.u_star.v[j] - sigma * st.v1.v[j];
        z_prime.v[j] = base;
        z.v[j] = base - s2 * st.v2.v[j];
    }
}

void phase_decompose(expansion_state& st, const lin_pack& pack) {
    const grid& g = *st.v1.g;
    st.a1 = phase_functional(st.v1, pack);
    st.w1 = field(g);
    for (int j = 0; j < g.n; j++)
        st.w1.v[j] = st.v1.v[j] - st.a1 * pack.u_star_x.v[j];
    field y2(g);
    double h = 0.5 * st.a1 * st.a1;
    for (int j = 0; j < g.n; j++)
        y2.v[j] = st.v2.v[j] - h * pack.u_star_xx.v[j];
    st.a2 = phase_functional(y2, pack);
    st.w2 = field(g);
    for (int j = 0; j < g.n; j++)
        st.w2.v[j] = y2.v[j] - st.a2 * pack.u_star_x.v[j];
}

field resampled_wave(const model_params& prm, const grid& g, double shift) {
    field f(g);
    double s = prm.wave_scale;
    double amp = std::sqrt(2.0 * s * s / prm.kappa);
    cplx ph = cplx(std::cos(prm.theta), std::sin(prm.theta));
    for (int j = 0; j < g.n; j++)
        f.v[j] = amp / std::cosh(s * (g.x[j] + shift)) * ph;
    return f;
}

static double dist_sq(const field& u, const model_params& prm, double a) {
    const grid& g = *u.g;
    double s = prm.wave_scale;
    double amp = std::sqrt(2.0 * s * s / prm.kappa);
    cplx ph = cplx(std::cos(prm.theta), std::sin(prm.theta));
    double acc = 0.0;
    for (int j = 0; j < g.n; j++) {
        cplx w = amp / std::cosh(s * (g.x[j] + a)) * ph;
        acc += std::norm(u.v[j] - w);
    }
    return acc * g.dx;
}

orbital_fit orbital_distance(const field& u, const model_params& prm,
                             fft_ws& ws) {
    const grid& g = *u.g;
    field us = resampled_wave(prm, g, 0.0);
    field a = u, b = us;
    ws.fwd(a);
    ws.fwd(b);
    for (int j = 0; j < g.n; j++) a.v[j] *= std::conj(b.v[j]);
    ws.bwd(a);
    // a[j] now holds <u, u*(. - x_j)> / dx up to the dx weight
    int jbest = 0;
    double cbest = a.v[0].real();
    for (int j = 1; j < g.n; j++)
        if (a.v[j].real() > cbest) {
            cbest = a.v[j].real();
            jbest = j;
        }
    double raw = jbest * g.dx;
    if (raw > 0.5 * g.box) raw -= g.box;
    double a0 = -raw;
    // golden section on [a0 - dx, a0 + dx]
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = a0 - g.dx, hi = a0 + g.dx;
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = dist_sq(u, prm, x1), f2 = dist_sq(u, prm, x2);
    while (hi - lo > 1e-4 * g.dx) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = dist_sq(u, prm, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = dist_sq(u, prm, x2);
        }
    }
    orbital_fit fit;
    fit.shift = 0.5 * (lo + hi);
    fit.dist = std::sqrt(std::max(0.0, dist_sq(u, prm, fit.shift)));
    return fit;
}

void reset_frame(field& u, expansion_state& st, double shift,
                 const solitary_wave& wave, double sigma, fft_ws& ws) {
    u = translate(u, -shift, ws);
    const grid& g = *u.g;
    st.v1 = field(g);
    st.v2 = field(g);
    if (sigma != 0.0)
        for (int j = 0; j < g.n; j++)
            st.v1.v[j] = (u.v[j] - wave.u_star.v[j]) / sigma;
    st.a1 = 0.0;
    st.a2 = 0.0;
    st.w1 = field(g);
    st.w2 = field(g);
}

stopping_times detect_stopping(const path_diag& d, const stop_caps& caps) {
    stopping_times st;
    double T = d.t.empty() ? 0.0 : d.t.back();
    st.tau_v1 = st.tau_v2 = st.tau_z = st.tau_z_prime = T;
    double c_v1 = caps.eps / caps.sigma;
    double c_v2 = c_v1 * c_v1;
    double c_z = caps.c1 * caps.eps * caps.eps * caps.eps;
    double c_zp = caps.c1 * caps.eps * caps.eps;
    bool f1 = false, f2 = false, fz = false, fp = false;
    for (size_t i = 0; i < d.t.size(); i++) {
        if (!f1 && std::max(d.v1_inf2[i], d.v1_66[i]) > c_v1) {
            st.tau_v1 = d.t[i];
            f1 = true;
        }
        if (!f2 && std::max(d.v2_inf2[i], d.v2_66[i]) > c_v2) {
            st.tau_v2 = d.t[i];
            f2 = true;
        }
        if (!fz && std::max(d.z_inf2[i], d.z_66[i]) > c_z) {
            st.tau_z = d.t[i];
            fz = true;
        }
        if (!fp && std::max(d.zp_inf2[i], d.zp_66[i]) > c_zp) {
            st.tau_z_prime = d.t[i];
            fp = true;
        }
    }
    return st;
}

}  // namespace spf
