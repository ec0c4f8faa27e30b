// End-to-end acceptance battery. Each criterion prints exactly one PASS/FAIL
// line; the process exit code is the number of failures. --only k runs one.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "spf/expansion.hh"
#include "spf/experiments.hh"
#include "spf/io.hh"

using namespace spf;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
    std::printf("criterion %2d: %s  (%s)\n", id, ok ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
    if (!ok) failures++;
}

double wall() {
    using clk = std::chrono::steady_clock;
    static const clk::time_point t0 = clk::now();
    return std::chrono::duration<double>(clk::now() - t0).count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

model_params default_params() { return make_params(1.0, 0.15, 1.0, 1.05, 8.0); }

const char* kCache = "acc_cache";

// 1. deterministic wave transport: sup_t ||u - u*|| < 1e-6 over [0,10]
// on the production grid, under 30 s.
void crit1() {
    double t0 = wall();
    grid g(1024, 80.0);
    fft_ws ws(g);
    model_params prm = default_params();
    solitary_wave w = make_wave(prm, g, 0.0, ws);
    noise_model nm = make_noise(g, kernel_kind::gaussian, 1.0, false, 0.0, ws);
    double dt = 1e-3;
    spfnls_stepper st(g, prm, nm, dt, scheme_t::strang_exact_noise);
    field u = w.u_star, W(g);
    double sup = 0.0;
    int n_steps = 10000;
    for (int n = 0; n < n_steps; n++) {
        st.step_with(u, W, ws);
        double e = 0.0;
        for (int j = 0; j < g.n; j++) e += std::norm(u.v[j] - w.u_star.v[j]);
        sup = std::max(sup, std::sqrt(e * g.dx));
    }
    double el = wall() - t0;
    report(1, sup < 1e-6 && el < 30.0,
           fmt("sup ||u-u*|| = %.3e, %.1fs", sup, el));
}

// 2. conservative limit: relative mass drift < 1e-10 at every step on [0,5]
// with noise on.
void crit2() {
    grid g(1024, 80.0);
    fft_ws ws(g);
    model_params prm = make_params(1.0, 0.0, 1.0, 1.05, 8.0);
    solitary_wave w = make_wave(prm, g, 0.0, ws);
    noise_model nm = make_noise(g, kernel_kind::gaussian, 1.0, false, 0.1, ws);
    double dt = 1e-3;
    spfnls_stepper st(g, prm, nm, dt, scheme_t::strang_exact_noise);
    field u = w.u_star;
    rng_stream rs(derive_seed(20260822, 2, 0));
    double n0 = lp_norm(u, 2.0), worst = 0.0;
    for (int n = 0; n < 5000; n++) {
        st.step(u, rs, ws);
        worst = std::max(worst, std::fabs(lp_norm(u, 2.0) - n0) / n0);
    }
    report(2, worst < 1e-10, fmt("max relative drift = %.3e", worst));
}

// 3. a priori bound pathwise: ||u(t)|| <= e^{-eps(gamma-mu)t} ||u0|| (1+1e-6)
// at all recorded times, 20 paths.
void crit3() {
    grid g(256, 60.0);
    fft_ws ws(g);
    model_params prm = default_params();
    solitary_wave w = make_wave(prm, g, 0.0, ws);
    noise_model nm = make_noise(g, kernel_kind::gaussian, 1.0, false, 0.1, ws);
    stepper_config cfg{2e-3, scheme_t::strang_exact_noise, 5.0, 50};
    bool ok = true;
    double worst = 0.0;
    for (int p = 0; p < 20; p++) {
        rng_stream rs(derive_seed(31337, 0, p));
        trajectory tr = simulate(w.u_star, prm, nm, cfg, rs, ws, false);
        if (tr.blowup) ok = false;
        for (size_t i = 0; i < tr.times.size(); i++) {
            double bound = std::exp(-prm.eps * (prm.gamma - prm.mu) *
                                    tr.times[i]) *
                           tr.l2[0] * (1.0 + 1e-6);
            worst = std::max(worst, tr.l2[i] / bound);
            if (tr.l2[i] > bound) ok = false;
        }
    }
    report(3, ok, fmt("20 paths, max norm/bound = %.8f", worst));
}

// 4. spectrum: one numerical zero mode aligned with u*_x, the rest below
// -eps gamma, and the gap halves with eps; production grid under 2 min.
void crit4() {
    double t0 = wall();
    grid g(1024, 80.0);
    fft_ws ws(g);
    model_params prm = default_params();
    solitary_wave w = make_wave(prm, g, 0.0, ws);
    lin_pack pack = cached_linearization(w, ws, kCache);
    int near_zero = 0;
    double max_re = -1e30;
    for (const cplx& l : pack.spectrum) {
        if (std::abs(l) <= 1e-8 * pack.op_frob) {
            near_zero++;
            continue;
        }
        max_re = std::max(max_re, l.real());
    }
    double cx = inner_real(pack.right_null, w.u_star_x) /
                (lp_norm(pack.right_null, 2.0) * lp_norm(w.u_star_x, 2.0));
    double b = prm.eps * prm.gamma;
    model_params half = make_params(1.0, 0.075, 1.0, 1.05, 8.0);
    solitary_wave wh = make_wave(half, g, 0.0, ws);
    lin_pack packh = cached_linearization(wh, ws, kCache);
    double factor = packh.gap_b / pack.gap_b;
    double el = wall() - t0;
    bool ok = near_zero == 1 && cx > 0.9999 && max_re <= -b + 1e-6 &&
              factor > 0.4 && factor < 0.6 && el < 120.0;
    report(4, ok,
           fmt("zero modes %d, cos %.6f, max Re %.6f, halving %.3f, %.1fs",
               near_zero, cx, max_re, factor, el));
}

// 5. semigroup envelope: ||P(t) Pi f|| <= M e^{-a t} ||f|| for 50 random f on
// t in [0,20], allowing at most the 1% fit slack.
void crit5() {
    grid g(256, 60.0);
    fft_ws ws(g);
    model_params prm = default_params();
    solitary_wave w = make_wave(prm, g, 0.0, ws);
    lin_pack pack = cached_linearization(w, ws, kCache);
    int violations = 0;
    double worst = 0.0;
    for (int k = 0; k < 50; k++) {
        rng_stream rs(derive_seed(555, 0, k));
        field f(g);
        for (int j = 0; j < g.n; j++) f.v[j] = cplx(rs.gauss(), rs.gauss());
        f = project_pi(f, pack);
        double nf = lp_norm(f, 2.0);
        for (cplx& z : f.v) z /= nf;
        lin_stepper ls(g, w, 0.01);
        field v = f;
        for (int n = 1; n <= 2000; n++) {
            ls.step(v, ws);
            if (n % 50 != 0) continue;
            double t = 0.01 * n;
            double env = pack.fit_M * std::exp(-pack.fit_a * t);
            double ratio = lp_norm(v, 2.0) / env;
            worst = std::max(worst, ratio);
            if (ratio > 1.01) violations++;
        }
    }
    report(5, violations == 0,
           fmt("50 fields, worst ratio to M e^{-at} = %.6f, violations %d",
               worst, violations));
}

// 6. noise basis sums on the production grid: pointwise F = beta^2 and the
// Hilbert-Schmidt identity, both to 1e-8.
void crit6() {
    grid g(1024, 80.0);
    fft_ws ws(g);
    model_params prm = default_params();
    solitary_wave w = make_wave(prm, g, 0.0, ws);
    noise_model nm = make_noise(g, kernel_kind::gaussian, 1.0, false, 1.0, ws);
    double b2 = nm.beta * nm.beta;
    std::vector<double> F(g.n, 0.0);
    double hs = 0.0;
    for (int k = 0; k < g.n; k++) {
        field e(g);
        e.v[k] = cplx(1.0 / std::sqrt(g.dx), 0.0);
        field c = apply_phi(e, nm, ws);
        double a = 0.0;
        for (int j = 0; j < g.n; j++) {
            double cj = c.v[j].real();
            F[j] += cj * cj;
            a += std::norm(w.u_star.v[j]) * cj * cj;
        }
        hs += a * g.dx;
    }
    double ep = 0.0;
    for (int j = 0; j < g.n; j++) ep = std::max(ep, std::fabs(F[j] - b2));
    double want = b2 * std::pow(lp_norm(w.u_star, 2.0), 2);
    double eh = std::fabs(hs - want);
    report(6, ep < 1e-8 && eh < 1e-8,
           fmt("sup |F - beta^2| = %.3e, HS defect = %.3e", ep, eh));
}

ensemble_spec base_spec() {
    ensemble_spec s;
    s.prm = default_params();
    s.grid_n = 256;
    s.grid_box = 60.0;
    s.kernel = kernel_kind::gaussian;
    s.length_scale = 1.0;
    s.normalize_beta = false;
    s.cache_dir = kCache;
    return s;
}

// 7. phase diffusion: Var[sigma a1] linear in t with the oracle slope, and
// quadratic in sigma; 4000 paths per sigma keep the variance estimator's own
// sampling error (~2%) inside the 5% oracle tolerance. Under 10 min.
void crit7() {
    double t0 = wall();
    ensemble_spec s = base_spec();
    s.dt = 2e-3;
    s.t_end = 5.0;
    s.record_stride = 50;
    s.n_paths = 4000;
    s.base_seed = 20260822;
    s.sigma_sweep = {0.05, 0.1};
    diffusion_report r = run_phase_diffusion_study(s);
    double el = wall() - t0;
    bool ok = el < 600.0;
    double ratio = r.slope_reg[1] / r.slope_reg[0];
    if (!(ratio > 3.4 && ratio < 4.6)) ok = false;
    double worst_osc = 0.0;
    for (size_t i = 0; i < 2; i++) {
        if (r.r2[i] < 0.98) ok = false;
        double q = r.slope_reg[i] /
                   (s.sigma_sweep[i] * s.sigma_sweep[i] * r.oracle_q);
        worst_osc = std::max(worst_osc, std::fabs(q - 1.0));
    }
    if (worst_osc > 0.05) ok = false;
    report(7, ok,
           fmt("r2 %.4f/%.4f, sigma ratio %.2f, oracle dev %.3f, %.0fs",
               r.r2[0], r.r2[1], ratio, worst_osc, el));
}

// 8. expansion order: median sup ||z'|| ~ sigma^2 and ||z|| ~ sigma^3 over
// sigma = 0.02/0.04/0.08, slopes stable under dt halving.
void crit8() {
    ensemble_spec s = base_spec();
    s.dt = 2e-3;
    s.t_end = 1.0;
    s.record_stride = 25;
    s.n_paths = 200;
    s.base_seed = 424243;
    s.sigma_sweep = {0.02, 0.04, 0.08};
    order_report r = run_order_study(s);
    bool ok = r.slope_zp > 1.7 && r.slope_zp < 2.3 && r.slope_z > 2.7 &&
              r.slope_z < 3.3 &&
              std::fabs(r.slope_zp - r.slope_zp_h) < 0.1 &&
              std::fabs(r.slope_z - r.slope_z_h) < 0.1;
    report(8, ok,
           fmt("slope z' %.3f (half %.3f), z %.3f (half %.3f)", r.slope_zp,
               r.slope_zp_h, r.slope_z, r.slope_z_h));
}

// 9. fluctuation growth split: E||w1||^2 saturates, the centered second order
// remainder stays below t^1.2, the raw v2 second moment grows superlinearly.
void crit9() {
    ensemble_spec s = base_spec();
    s.dt = 5e-3;
    s.t_end = 67.0;
    s.record_stride = 100;
    s.n_paths = 512;
    s.base_seed = 909090;
    s.sigma_sweep = {};
    fluctuation_report r = run_fluctuation_study(s);
    bool ok = r.w1_exact_slope < 0.1 && r.w2_exponent <= 1.2 &&
              r.v2_exponent >= 1.5;
    report(9, ok,
           fmt("w1 slope %.4f, w2 exponent %.3f, v2 exponent %.3f",
               r.w1_exact_slope, r.w2_exponent, r.v2_exponent));
}

// 10. decomposition bookkeeping: reconstruction identities hold to 1e-8 on
// every recorded state of a coupled batch and a long detached batch.
void crit10() {
    ensemble_spec a = base_spec();
    a.dt = 2e-3;
    a.t_end = 1.0;
    a.record_stride = 25;
    a.n_paths = 50;
    a.base_seed = 424244;
    a.sigma_sweep = {0.08};
    order_report ra = run_order_study(a);
    ensemble_spec b = base_spec();
    b.dt = 5e-3;
    b.t_end = 10.0;
    b.record_stride = 100;
    b.n_paths = 32;
    b.base_seed = 909091;
    b.sigma_sweep = {};
    fluctuation_report rb = run_fluctuation_study(b);
    double worst = std::max(ra.max_recon_violation, rb.max_recon_violation);
    report(10, worst < 1e-8, fmt("max reconstruction defect = %.3e", worst));
}

// 11. escape statistics: tube radius 0.3, sigma sweep, 2000 paths, two
// windows; escape rates separate at 95% and the log-frequency fit has k > 0.
void crit11() {
    double t0 = wall();
    ensemble_spec s = base_spec();
    s.dt = 4e-3;
    s.record_stride = 25;
    s.n_paths = 2000;
    s.base_seed = 616161;
    s.sigma_sweep = {0.10, 0.08, 0.06};
    s.eps_sweep = {0.3};
    s.windows = 2;
    escape_report r = run_escape_study(s);
    double el = wall() - t0;
    bool ok = el < 1800.0 && r.cells.size() == 3 && r.fit_k > 0.0;
    for (const escape_cell& c : r.cells)
        if (c.censored) ok = false;
    for (size_t i = 0; ok && i + 1 < r.cells.size(); i++)
        if (!(r.cells[i].ci.lo > r.cells[i + 1].ci.hi)) ok = false;
    std::string cells;
    for (const escape_cell& c : r.cells)
        cells += fmt("%d/%d ", c.n_escaped, c.n);
    report(11, ok,
           fmt("escapes %sfit_k %.2f, %.0fs", cells.c_str(), r.fit_k, el));
}

// 12. determinism: the full report files are byte identical for any worker
// count.
void crit12() {
    auto run_into = [&](const std::string& dir, int workers) {
        std::filesystem::remove_all(dir);
        ensemble_spec d = base_spec();
        d.dt = 2e-3;
        d.t_end = 1.0;
        d.record_stride = 25;
        d.n_paths = 50;
        d.base_seed = 848484;
        d.sigma_sweep = {0.05, 0.1};
        d.workers = workers;
        diffusion_report rd = run_phase_diffusion_study(d);
        write_report(rd, d, dir);
        ensemble_spec o = base_spec();
        o.dt = 2e-3;
        o.t_end = 0.5;
        o.record_stride = 25;
        o.n_paths = 20;
        o.base_seed = 959595;
        o.sigma_sweep = {0.02, 0.08};
        o.workers = workers;
        order_report ro = run_order_study(o);
        write_report(ro, o, dir);
    };
    run_into("acc_out/c12_w1", 1);
    run_into("acc_out/c12_w8", 8);
    run_into("acc_out/c12_w16", 16);
    auto slurp = [](const std::string& p) {
        std::ifstream is(p, std::ios::binary);
        std::ostringstream ss;
        ss << is.rdbuf();
        return ss.str();
    };
    bool ok = true;
    int compared = 0;
    for (const auto& ent :
         std::filesystem::directory_iterator("acc_out/c12_w1")) {
        std::string name = ent.path().filename().string();
        std::string a = slurp("acc_out/c12_w1/" + name);
        if (a.empty()) ok = false;
        if (a != slurp("acc_out/c12_w8/" + name)) ok = false;
        if (a != slurp("acc_out/c12_w16/" + name)) ok = false;
        compared++;
    }
    if (compared < 5) ok = false;
    report(12, ok, fmt("%d files compared across workers 1/8/16", compared));
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; i++)
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc)
            only = std::atoi(argv[i + 1]);
    void (*crits[])() = {crit1, crit2, crit3, crit4,  crit5,  crit6,
                         crit7, crit8, crit9, crit10, crit11, crit12};
    if (only >= 1 && only <= 12) {
        crits[only - 1]();
    } else {
        for (auto* c : crits) c();
    }
    return failures;
}
