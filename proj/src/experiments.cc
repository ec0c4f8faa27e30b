#include "spf/experiments.hh"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <thread>

#include "spf/io.hh"

namespace spf {

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const char* env = std::getenv("SPF_WORKERS");
    if (env != nullptr) {
        int w = std::atoi(env);
        if (w > 0) return w;
    }
    unsigned h = std::thread::hardware_concurrency();
    return h > 0 ? int(h) : 1;
}

void parallel_paths(int n_paths, int workers,
                    const std::function<void(int)>& fn) {
    if (workers <= 1) {
        for (int i = 0; i < n_paths; i++) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr ep;
    std::mutex em;
    auto drain = [&]() {
        while (true) {
            int i = next.fetch_add(1);
            if (i >= n_paths) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(em);
                if (!ep) ep = std::current_exception();
            }
        }
    };
    std::vector<std::thread> ts;
    for (int w = 0; w < workers; w++) ts.emplace_back(drain);
    for (std::thread& t : ts) t.join();
    if (ep) std::rethrow_exception(ep);
}

wilson_interval wilson_ci(int k, int n, double z) {
    wilson_interval w{0.0, 1.0};
    if (n <= 0) return w;
    double p = double(k) / n, z2 = z * z;
    double den = 1.0 + z2 / n;
    double mid = (p + 0.5 * z2 / n) / den;
    double half = z * std::sqrt(p * (1.0 - p) / n + 0.25 * z2 / (n * n)) / den;
    w.lo = std::max(0.0, mid - half);
    w.hi = std::min(1.0, mid + half);
    return w;
}

double ks_gaussian_pvalue(std::vector<double> samples, double var) {
    size_t n = samples.size();
    if (n == 0 || !(var > 0.0)) return 1.0;
    std::sort(samples.begin(), samples.end());
    double sd = std::sqrt(var), d = 0.0;
    for (size_t i = 0; i < n; i++) {
        double f = 0.5 * std::erfc(-samples[i] / (sd * std::sqrt(2.0)));
        d = std::max(d, std::fabs(f - double(i) / n));
        d = std::max(d, std::fabs(double(i + 1) / n - f));
    }
    double rn = std::sqrt(double(n));
    double k = (rn + 0.12 + 0.11 / rn) * d;
    double p = 0.0;
    for (int j = 1; j <= 100; j++)
        p += 2.0 * (j % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * j * j * k * k);
    return std::min(1.0, std::max(0.0, p));
}

struct line_fit {
    double slope, intercept, r2;
};

static line_fit fit_line(const std::vector<double>& xs,
                         const std::vector<double>& ys) {
    size_t n = xs.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; i++) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    line_fit f{0.0, 0.0, 0.0};
    double den = n * sxx - sx * sx;
    if (n < 2 || std::fabs(den) < 1e-300) return f;
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    double ssr = 0, sst = 0, ym = sy / n;
    for (size_t i = 0; i < n; i++) {
        double e = ys[i] - (f.slope * xs[i] + f.intercept);
        ssr += e * e;
        sst += (ys[i] - ym) * (ys[i] - ym);
    }
    f.r2 = sst > 0.0 ? 1.0 - ssr / sst : 1.0;
    return f;
}

static double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct study_ctx {
    grid g;
    fft_ws ws;
    solitary_wave wave;
    lin_pack pack;
    noise_model nm;
    study_ctx(const ensemble_spec& s)
        : g(s.grid_n, s.grid_box), ws(g),
          wave(make_wave(s.prm, g, 0.0, ws)),
          pack(cached_linearization(wave, ws, s.cache_dir)),
          nm(make_noise(g, s.kernel, s.length_scale, s.normalize_beta, 1.0,
                        ws, "")) {}
};

// noise columns b_k = -i u* Phi e_k on the node basis e_k = delta_k / sqrt(dx)
static std::vector<field> noise_columns(const study_ctx& cx, fft_ws& ws) {
    const grid& g = cx.g;
    std::vector<field> cols;
    cols.reserve(g.n);
    const cplx I(0.0, 1.0);
    for (int k = 0; k < g.n; k++) {
        field e(g);
        e.v[k] = cplx(1.0 / std::sqrt(g.dx), 0.0);
        field c = apply_phi(e, cx.nm, ws);
        for (int j = 0; j < g.n; j++)
            c.v[j] = -I * cx.wave.u_star.v[j] * c.v[j].real();
        cols.push_back(std::move(c));
    }
    return cols;
}

diffusion_report run_phase_diffusion_study(const ensemble_spec& spec) {
    study_ctx cx(spec);
    int workers = resolve_workers(spec.workers);
    diffusion_report rep;
    rep.sigmas = spec.sigma_sweep;

    {
        std::vector<field> cols = noise_columns(cx, cx.ws);
        double q = 0.0;
        for (const field& b : cols) {
            double p = phase_functional(b, cx.pack);
            q += p * p;
        }
        rep.oracle_q = q;
    }

    int n_steps = int(std::llround(spec.t_end / spec.dt));
    int stride = spec.record_stride;
    int n_rec = n_steps / stride;
    rep.t.resize(n_rec + 1);
    for (int r = 0; r <= n_rec; r++) rep.t[r] = r * stride * spec.dt;

    for (size_t si = 0; si < spec.sigma_sweep.size(); si++) {
        double sigma = spec.sigma_sweep[si];
        std::vector<std::vector<double>> a1s(
            spec.n_paths, std::vector<double>(n_rec + 1, 0.0));
        parallel_paths(spec.n_paths, workers, [&](int p) {
            fft_ws ws(cx.g);
            rng_stream rs(derive_seed(spec.base_seed, si, p));
            lin_stepper ls(cx.g, cx.wave, spec.dt);
            field v1(cx.g);
            const cplx I(0.0, 1.0);
            int rec = 1;
            for (int n = 0; n < n_steps; n++) {
                field W = sample_increment(cx.nm, spec.dt, rs, ws);
                for (int j = 0; j < cx.g.n; j++)
                    v1.v[j] += -I * cx.wave.u_star.v[j] * W.v[j].real();
                ls.step(v1, ws);
                if ((n + 1) % stride == 0)
                    a1s[p][rec++] = phase_functional(v1, cx.pack);
            }
        });
        std::vector<double> var(n_rec + 1, 0.0);
        for (int r = 0; r <= n_rec; r++) {
            double m = 0.0;
            for (int p = 0; p < spec.n_paths; p++) m += a1s[p][r];
            m /= spec.n_paths;
            double s = 0.0;
            for (int p = 0; p < spec.n_paths; p++) {
                double d = a1s[p][r] - m;
                s += d * d;
            }
            var[r] = spec.n_paths > 1 ? sigma * sigma * s / (spec.n_paths - 1)
                                      : 0.0;
        }
        rep.var_a1.push_back(var);

        std::vector<double> xs, ys;
        for (int r = 0; r <= n_rec; r++)
            if (rep.t[r] >= 0.5 && rep.t[r] <= 5.0) {
                xs.push_back(rep.t[r]);
                ys.push_back(var[r]);
            }
        line_fit lf = fit_line(xs, ys);
        rep.slope_reg.push_back(lf.slope);
        rep.r2.push_back(lf.r2);

        double qv = 0.0;
        for (int p = 0; p < spec.n_paths; p++)
            for (int r = 0; r < n_rec; r++) {
                double d = a1s[p][r + 1] - a1s[p][r];
                qv += d * d;
            }
        rep.slope_qv.push_back(sigma * sigma * qv /
                               (double(spec.n_paths) * rep.t[n_rec]));

        for (int part = 1; part <= 3; part++) {
            double ts = part == 1 ? 0.25 * spec.t_end
                                  : (part == 2 ? 0.5 * spec.t_end
                                               : spec.t_end);
            int rb = 0;
            for (int r = 0; r <= n_rec; r++)
                if (std::fabs(rep.t[r] - ts) < std::fabs(rep.t[rb] - ts))
                    rb = r;
            std::vector<double> smp(spec.n_paths);
            for (int p = 0; p < spec.n_paths; p++)
                smp[p] = sigma * a1s[p][rb];
            rep.ks_p.push_back(ks_gaussian_pvalue(
                smp, sigma * sigma * rep.oracle_q * rep.t[rb]));
        }

        double m = 0.0, s = 0.0;
        for (int p = 0; p < spec.n_paths; p++) m += sigma * a1s[p][n_rec];
        m /= spec.n_paths;
        for (int p = 0; p < spec.n_paths; p++) {
            double d = sigma * a1s[p][n_rec] - m;
            s += d * d;
        }
        rep.mean_a1_final.push_back(m);
        rep.se_a1_final.push_back(
            spec.n_paths > 1
                ? std::sqrt(s / (spec.n_paths - 1) / spec.n_paths)
                : 0.0);
    }
    return rep;
}

order_report run_order_study(const ensemble_spec& spec) {
    study_ctx cx(spec);
    int workers = resolve_workers(spec.workers);
    order_report rep;
    rep.sigmas = spec.sigma_sweep;
    rep.max_recon_violation = 0.0;
    int n_coarse = int(std::llround(spec.t_end / spec.dt));
    std::vector<double> recon_max(spec.n_paths, 0.0);

    for (size_t si = 0; si < spec.sigma_sweep.size(); si++) {
        double sigma = spec.sigma_sweep[si];
        std::vector<double> sup_z(spec.n_paths), sup_zp(spec.n_paths),
            sup_z_h(spec.n_paths), sup_zp_h(spec.n_paths);
        parallel_paths(spec.n_paths, workers, [&](int p) {
            fft_ws ws(cx.g);
            rng_stream rs(derive_seed(spec.base_seed, si, p));
            expansion_runner rc(cx.wave, cx.pack, cx.nm, spec.dt, sigma);
            expansion_runner rf(cx.wave, cx.pack, cx.nm, 0.5 * spec.dt, sigma);
            field uc = cx.wave.u_star, uf = cx.wave.u_star;
            expansion_state sc, sf;
            sc.v1 = field(cx.g);
            sc.v2 = field(cx.g);
            sf.v1 = field(cx.g);
            sf.v2 = field(cx.g);
            field z(cx.g), zp(cx.g);
            double mz = 0, mzp = 0, mzh = 0, mzph = 0, rmax = 0;
            for (int n = 0; n < n_coarse; n++) {
                field Wa = sample_increment(cx.nm, 0.5 * spec.dt, rs, ws);
                rf.step_with(uf, sf, Wa, ws);
                field Wb = sample_increment(cx.nm, 0.5 * spec.dt, rs, ws);
                rf.step_with(uf, sf, Wb, ws);
                for (int j = 0; j < cx.g.n; j++) Wa.v[j] += Wb.v[j];
                rc.step_with(uc, sc, Wa, ws);
                compute_residuals(uc, sc, cx.wave, sigma, z, zp);
                mz = std::max(mz, lp_norm(z, 2.0));
                mzp = std::max(mzp, lp_norm(zp, 2.0));
                compute_residuals(uf, sf, cx.wave, sigma, z, zp);
                mzh = std::max(mzh, lp_norm(z, 2.0));
                mzph = std::max(mzph, lp_norm(zp, 2.0));
                phase_decompose(sc, cx.pack);
                double va = std::fabs(phase_functional(sc.w1, cx.pack)) +
                            std::fabs(phase_functional(sc.w2, cx.pack));
                field r1(cx.g);
                for (int j = 0; j < cx.g.n; j++)
                    r1.v[j] = sc.v1.v[j] - sc.a1 * cx.pack.u_star_x.v[j] -
                              sc.w1.v[j];
                double vb = lp_norm(r1, 2.0);
                for (int j = 0; j < cx.g.n; j++)
                    r1.v[j] = sc.v2.v[j] - sc.a2 * cx.pack.u_star_x.v[j] -
                              0.5 * sc.a1 * sc.a1 * cx.pack.u_star_xx.v[j] -
                              sc.w2.v[j];
                vb = std::max(vb, lp_norm(r1, 2.0));
                rmax = std::max(rmax, std::max(va, vb));
            }
            sup_z[p] = mz;
            sup_zp[p] = mzp;
            sup_z_h[p] = mzh;
            sup_zp_h[p] = mzph;
            recon_max[p] = std::max(recon_max[p], rmax);
        });
        rep.med_z.push_back(median_of(sup_z));
        rep.med_zp.push_back(median_of(sup_zp));
        rep.med_z_h.push_back(median_of(sup_z_h));
        rep.med_zp_h.push_back(median_of(sup_zp_h));
    }
    for (double r : recon_max)
        rep.max_recon_violation = std::max(rep.max_recon_violation, r);

    std::vector<double> ls;
    for (double s : rep.sigmas) ls.push_back(std::log(s));
    auto slope_of = [&](const std::vector<double>& med) {
        std::vector<double> ys;
        for (double m : med) ys.push_back(std::log(m));
        return fit_line(ls, ys).slope;
    };
    rep.slope_z = slope_of(rep.med_z);
    rep.slope_zp = slope_of(rep.med_zp);
    rep.slope_z_h = slope_of(rep.med_z_h);
    rep.slope_zp_h = slope_of(rep.med_zp_h);
    return rep;
}

escape_report run_escape_study(const ensemble_spec& spec) {
    study_ctx cx(spec);
    int workers = resolve_workers(spec.workers);
    escape_report rep;
    rep.window_T = std::log(6.0 * cx.pack.fit_M) / cx.pack.fit_a;
    int steps_per_window = int(std::llround(rep.window_T / spec.dt));
    int n_steps = spec.windows * steps_per_window;
    int stride = spec.record_stride;

    size_t cell_idx = 0;
    for (double radius : spec.eps_sweep)
        for (double sigma : spec.sigma_sweep) {
            escape_cell cell;
            cell.sigma = sigma;
            cell.radius = radius;
            cell.n = spec.n_paths;
            cell.per_window.assign(spec.windows, 0);
            cell.censored = false;
            std::vector<int> esc_w(spec.n_paths, -1);
            std::vector<char> bad(spec.n_paths, 0);
            noise_model nm = cx.nm;
            nm.sigma = sigma;
            parallel_paths(spec.n_paths, workers, [&](int p) {
                fft_ws ws(cx.g);
                rng_stream rs(derive_seed(spec.base_seed, cell_idx, p));
                spfnls_stepper st(cx.g, spec.prm, nm, spec.dt,
                                  scheme_t::strang_exact_noise);
                field u = cx.wave.u_star;
                for (int n = 0; n < n_steps; n++) {
                    st.step(u, rs, ws);
                    if ((n + 1) % stride == 0 || n + 1 == n_steps) {
                        if (!all_finite(u)) {
                            bad[p] = 1;
                            return;
                        }
                        orbital_fit fit =
                            orbital_distance(u, spec.prm, ws);
                        if (fit.dist >= radius) {
                            esc_w[p] = std::min(spec.windows - 1,
                                                int(n * spec.dt /
                                                    rep.window_T));
                            return;
                        }
                    }
                }
            });
            cell.n_escaped = 0;
            for (int p = 0; p < spec.n_paths; p++) {
                if (bad[p]) cell.censored = true;
                if (esc_w[p] >= 0) {
                    cell.n_escaped++;
                    cell.per_window[esc_w[p]]++;
                }
            }
            cell.ci = wilson_ci(cell.n_escaped, cell.n);
            rep.cells.push_back(cell);
            cell_idx++;
        }

    std::vector<double> xs, ys;
    for (const escape_cell& c : rep.cells)
        if (!c.censored && c.n_escaped > 0 && c.n_escaped < c.n) {
            xs.push_back(c.radius * c.radius / (c.sigma * c.sigma));
            ys.push_back(std::log(double(c.n_escaped) / c.n));
        }
    line_fit lf = fit_line(xs, ys);
    rep.fit_k = -lf.slope;
    rep.fit_c = std::exp(lf.intercept) / (spec.windows * rep.window_T);
    rep.fit_r2 = lf.r2;
    return rep;
}

fluctuation_report run_fluctuation_study(const ensemble_spec& spec,
                                         bool with_v10) {
    study_ctx cx(spec);
    int workers = resolve_workers(spec.workers);
    fluctuation_report rep;
    double a = cx.pack.gap_b;
    int n_steps = int(std::llround(spec.t_end / spec.dt));
    int stride = spec.record_stride;
    int n_rec = n_steps / stride;
    rep.t.resize(n_rec + 1);
    for (int r = 0; r <= n_rec; r++) rep.t[r] = r * stride * spec.dt;

    // exact second moment: one pass over the whole noise basis, E||w1(t)||^2
    // accumulated as the Frobenius integral of the projected propagated block
    {
        std::vector<field> Y = noise_columns(cx, cx.ws);
        lin_stepper ls(cx.g, cx.wave, spec.dt);
        rep.w1_exact.assign(n_rec + 1, 0.0);
        double acc = 0.0;
        int rec = 1;
        for (int n = 0; n < n_steps; n++) {
            ls.step_block(Y, cx.ws);
            double s = 0.0;
            for (const field& y : Y) {
                double a1 = phase_functional(y, cx.pack);
                for (int j = 0; j < cx.g.n; j++)
                    s += std::norm(y.v[j] - a1 * cx.pack.u_star_x.v[j]);
            }
            acc += s * cx.g.dx * spec.dt;
            if ((n + 1) % stride == 0) rep.w1_exact[rec++] = acc;
        }
    }

    // MC ensemble of the coupled expansion (u attached only when a sigma is
    // supplied; the curves themselves are sigma-free)
    bool with_u = !spec.sigma_sweep.empty();
    double sigma_mc = with_u ? spec.sigma_sweep[0] : 0.0;
    int P = spec.n_paths;
    std::vector<std::vector<double>> w1sq(P), w2sq(P), v2sq(P), zsq(P);
    std::vector<double> recon(P, 0.0);
    parallel_paths(P, workers, [&](int p) {
        fft_ws ws(cx.g);
        rng_stream rs(derive_seed(spec.base_seed, 7, p));
        expansion_runner run(cx.wave, cx.pack, cx.nm, spec.dt, sigma_mc);
        field u;
        if (with_u) u = cx.wave.u_star;
        expansion_state st;
        st.v1 = field(cx.g);
        st.v2 = field(cx.g);
        w1sq[p].assign(n_rec + 1, 0.0);
        w2sq[p].assign(n_rec + 1, 0.0);
        v2sq[p].assign(n_rec + 1, 0.0);
        zsq[p].assign(n_rec + 1, 0.0);
        field z(cx.g), zp(cx.g);
        int rec = 1;
        for (int n = 0; n < n_steps; n++) {
            run.step(u, st, rs, ws);
            if ((n + 1) % stride == 0) {
                phase_decompose(st, cx.pack);
                double s1 = lp_norm(st.w1, 2.0), s2 = lp_norm(st.w2, 2.0);
                double sv = lp_norm(st.v2, 2.0);
                w1sq[p][rec] = s1 * s1;
                w2sq[p][rec] = s2 * s2;
                v2sq[p][rec] = sv * sv;
                if (with_u) {
                    compute_residuals(u, st, cx.wave, sigma_mc, z, zp);
                    double sz = lp_norm(z, 2.0);
                    zsq[p][rec] = sz * sz;
                }
                recon[p] = std::max(
                    recon[p], std::fabs(phase_functional(st.w1, cx.pack)) +
                                  std::fabs(phase_functional(st.w2, cx.pack)));
                rec++;
            }
        }
    });
    rep.w1_mc.assign(n_rec + 1, 0.0);
    rep.w1_mc_se.assign(n_rec + 1, 0.0);
    rep.w2_mc.assign(n_rec + 1, 0.0);
    rep.v2_mc.assign(n_rec + 1, 0.0);
    rep.z_mc.assign(n_rec + 1, 0.0);
    for (int r = 0; r <= n_rec; r++) {
        double m1 = 0, m2 = 0, mv = 0, mz = 0;
        for (int p = 0; p < P; p++) {
            m1 += w1sq[p][r];
            m2 += w2sq[p][r];
            mv += v2sq[p][r];
            mz += zsq[p][r];
        }
        rep.w1_mc[r] = m1 / P;
        rep.w2_mc[r] = m2 / P;
        rep.v2_mc[r] = mv / P;
        rep.z_mc[r] = mz / P;
        double s = 0.0;
        for (int p = 0; p < P; p++) {
            double d = w1sq[p][r] - rep.w1_mc[r];
            s += d * d;
        }
        rep.w1_mc_se[r] = P > 1 ? std::sqrt(s / (P - 1) / P) : 0.0;
    }
    rep.max_recon_violation = 0.0;
    for (double r : recon)
        rep.max_recon_violation = std::max(rep.max_recon_violation, r);

    auto log_slope = [&](const std::vector<double>& curve, double lo,
                         double hi) {
        std::vector<double> xs, ys;
        for (int r = 1; r <= n_rec; r++)
            if (rep.t[r] >= lo && rep.t[r] <= hi && curve[r] > 0.0) {
                xs.push_back(std::log(rep.t[r]));
                ys.push_back(std::log(curve[r]));
            }
        return fit_line(xs, ys).slope;
    };
    rep.w1_exact_slope = log_slope(rep.w1_exact, 5.0 / a, 10.0 / a);
    rep.w2_exponent = log_slope(rep.w2_mc, 1.0 / a, 10.0 / a);
    rep.v2_exponent = log_slope(rep.v2_mc, 1.0 / a, 10.0 / a);

    rep.mc_exact_max_dev = 0.0;
    for (int r = 0; r <= n_rec; r++)
        if (rep.t[r] >= 1.0 && rep.w1_mc_se[r] > 0.0)
            rep.mc_exact_max_dev =
                std::max(rep.mc_exact_max_dev,
                         std::fabs(rep.w1_mc[r] - rep.w1_exact[r]) /
                             rep.w1_mc_se[r]);

    rep.relax_rate = 0.0;
    if (with_v10) {
        rng_stream rs(derive_seed(spec.base_seed, 9, 0));
        field v(cx.g);
        for (int j = 0; j < cx.g.n; j++) v.v[j] = cplx(rs.gauss(), rs.gauss());
        v = project_pi(v, cx.pack);
        double nv = lp_norm(v, 2.0);
        for (cplx& z2 : v.v) z2 /= nv;
        lin_stepper ls(cx.g, cx.wave, spec.dt);
        double t_hi = 3.0 / a;
        int ns = int(std::llround(t_hi / spec.dt));
        std::vector<double> xs, ys;
        for (int n = 0; n < ns; n++) {
            ls.step(v, cx.ws);
            double t = (n + 1) * spec.dt;
            if (t >= 1.0 / a && (n + 1) % stride == 0) {
                xs.push_back(t);
                ys.push_back(std::log(lp_norm(v, 2.0)));
            }
        }
        rep.relax_rate = -fit_line(xs, ys).slope;
    }
    return rep;
}

static std::string spec_echo(const ensemble_spec& s, const char* study) {
    std::ostringstream o;
    o << "study = " << study << "\n";
    o << "nu = " << format_double(s.prm.nu) << "\n";
    o << "eps = " << format_double(s.prm.eps) << "\n";
    o << "gamma = " << format_double(s.prm.gamma) << "\n";
    o << "mu = " << format_double(s.prm.mu) << "\n";
    o << "kappa = " << format_double(s.prm.kappa) << "\n";
    o << "n = " << s.grid_n << "\n";
    o << "box = " << format_double(s.grid_box) << "\n";
    o << "kernel = "
      << (s.kernel == kernel_kind::gaussian
              ? "gaussian"
              : (s.kernel == kernel_kind::box ? "box" : "file"))
      << "\n";
    o << "length_scale = " << format_double(s.length_scale) << "\n";
    o << "normalize_beta = " << (s.normalize_beta ? "true" : "false") << "\n";
    o << "dt = " << format_double(s.dt) << "\n";
    o << "t_end = " << format_double(s.t_end) << "\n";
    o << "record_stride = " << s.record_stride << "\n";
    o << "n_paths = " << s.n_paths << "\n";
    o << "base_seed = " << s.base_seed << "\n";
    auto list = [&](const std::vector<double>& v) {
        std::string r;
        for (size_t i = 0; i < v.size(); i++)
            r += (i ? "," : "") + format_double(v[i]);
        return r;
    };
    o << "sigma_sweep = " << list(s.sigma_sweep) << "\n";
    o << "eps_sweep = " << list(s.eps_sweep) << "\n";
    o << "windows = " << s.windows << "\n";
    return o.str();
}

static void emit(const std::string& dir, const std::string& name,
                 const std::string& echo, const std::string& body) {
    std::filesystem::create_directories(dir);
    std::string h = write_hashed(dir + "/" + name, echo, body);
    append_manifest(dir, name, h);
}

void write_report(const escape_report& r, const ensemble_spec& s,
                  const std::string& dir) {
    std::string echo = spec_echo(s, "escape");
    std::ostringstream csv;
    csv << "sigma,radius,n,n_escaped,p_hat,ci_lo,ci_hi,censored";
    for (int w = 0; w < s.windows; w++) csv << ",window" << w;
    csv << "\n";
    for (const escape_cell& c : r.cells) {
        csv << format_double(c.sigma) << "," << format_double(c.radius) << ","
            << c.n << "," << c.n_escaped << ","
            << format_double(double(c.n_escaped) / c.n) << ","
            << format_double(c.ci.lo) << "," << format_double(c.ci.hi) << ","
            << (c.censored ? 1 : 0);
        for (int w : c.per_window) csv << "," << w;
        csv << "\n";
    }
    emit(dir, "escape_cells.csv", echo, csv.str());
    std::ostringstream sum;
    sum << "window_T = " << format_double(r.window_T) << "\n";
    sum << "horizon = " << format_double(s.windows * r.window_T) << "\n";
    sum << "fit_c = " << format_double(r.fit_c) << "\n";
    sum << "fit_k = " << format_double(r.fit_k) << "\n";
    sum << "fit_r2 = " << format_double(r.fit_r2) << "\n";
    emit(dir, "escape_summary.txt", echo, sum.str());
}

void write_report(const diffusion_report& r, const ensemble_spec& s,
                  const std::string& dir) {
    std::string echo = spec_echo(s, "diffusion");
    std::ostringstream csv;
    csv << "t";
    for (double sg : r.sigmas) csv << ",var_sigma_" << format_double(sg);
    csv << "\n";
    for (size_t i = 0; i < r.t.size(); i++) {
        csv << format_double(r.t[i]);
        for (size_t si = 0; si < r.sigmas.size(); si++)
            csv << "," << format_double(r.var_a1[si][i]);
        csv << "\n";
    }
    emit(dir, "diffusion_var.csv", echo, csv.str());
    std::ostringstream sum;
    sum << "oracle_q = " << format_double(r.oracle_q) << "\n";
    for (size_t si = 0; si < r.sigmas.size(); si++) {
        std::string tag = format_double(r.sigmas[si]);
        sum << "slope_reg_" << tag << " = " << format_double(r.slope_reg[si])
            << "\n";
        sum << "slope_qv_" << tag << " = " << format_double(r.slope_qv[si])
            << "\n";
        sum << "r2_" << tag << " = " << format_double(r.r2[si]) << "\n";
        for (int k = 0; k < 3; k++)
            sum << "ks_p_" << tag << "_" << k << " = "
                << format_double(r.ks_p[3 * si + k]) << "\n";
        sum << "mean_a1_final_" << tag << " = "
            << format_double(r.mean_a1_final[si]) << "\n";
        sum << "se_a1_final_" << tag << " = "
            << format_double(r.se_a1_final[si]) << "\n";
    }
    emit(dir, "diffusion_summary.txt", echo, sum.str());
}

void write_report(const order_report& r, const ensemble_spec& s,
                  const std::string& dir) {
    std::string echo = spec_echo(s, "order");
    std::ostringstream csv;
    csv << "sigma,med_z,med_zp,med_z_half,med_zp_half\n";
    for (size_t i = 0; i < r.sigmas.size(); i++)
        csv << format_double(r.sigmas[i]) << "," << format_double(r.med_z[i])
            << "," << format_double(r.med_zp[i]) << ","
            << format_double(r.med_z_h[i]) << ","
            << format_double(r.med_zp_h[i]) << "\n";
    emit(dir, "order_medians.csv", echo, csv.str());
    std::ostringstream sum;
    sum << "slope_z = " << format_double(r.slope_z) << "\n";
    sum << "slope_zp = " << format_double(r.slope_zp) << "\n";
    sum << "slope_z_half = " << format_double(r.slope_z_h) << "\n";
    sum << "slope_zp_half = " << format_double(r.slope_zp_h) << "\n";
    sum << "max_recon_violation = " << format_double(r.max_recon_violation)
        << "\n";
    emit(dir, "order_summary.txt", echo, sum.str());
}

void write_report(const fluctuation_report& r, const ensemble_spec& s,
                  const std::string& dir) {
    std::string echo = spec_echo(s, "fluctuation");
    std::ostringstream csv;
    csv << "t,w1_exact,w1_mc,w1_mc_se,w2_mc,v2_mc,z_mc\n";
    for (size_t i = 0; i < r.t.size(); i++)
        csv << format_double(r.t[i]) << "," << format_double(r.w1_exact[i])
            << "," << format_double(r.w1_mc[i]) << ","
            << format_double(r.w1_mc_se[i]) << ","
            << format_double(r.w2_mc[i]) << "," << format_double(r.v2_mc[i])
            << "," << format_double(r.z_mc[i]) << "\n";
    emit(dir, "fluctuation_curves.csv", echo, csv.str());
    std::ostringstream sum;
    sum << "w1_exact_slope = " << format_double(r.w1_exact_slope) << "\n";
    sum << "w2_exponent = " << format_double(r.w2_exponent) << "\n";
    sum << "v2_exponent = " << format_double(r.v2_exponent) << "\n";
    sum << "mc_exact_max_dev = " << format_double(r.mc_exact_max_dev) << "\n";
    sum << "max_recon_violation = " << format_double(r.max_recon_violation)
        << "\n";
    sum << "relax_rate = " << format_double(r.relax_rate) << "\n";
    emit(dir, "fluctuation_summary.txt", echo, sum.str());
}

}  // namespace spf
