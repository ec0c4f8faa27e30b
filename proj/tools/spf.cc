#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spf/expansion.hh"
#include "spf/experiments.hh"
#include "spf/io.hh"

using namespace spf;

namespace {

double now_s() {
    using clk = std::chrono::steady_clock;
    static const clk::time_point t0 = clk::now();
    return std::chrono::duration<double>(clk::now() - t0).count();
}

run_config assemble(const std::string& config_path,
                    const std::vector<std::string>& sets) {
    run_config c;
    if (!config_path.empty()) c = load_config(config_path);
    for (const std::string& s : sets) {
        size_t dot = s.find('.'), eq = s.find('=');
        if (dot == std::string::npos || eq == std::string::npos || dot > eq)
            throw config_error("--set expects section.key=value, got '" + s +
                               "'");
        apply_config_entry(c, s.substr(0, dot), s.substr(dot + 1, eq - dot - 1),
                           s.substr(eq + 1));
    }
    return c;
}

lin_pack timed_pack(const solitary_wave& wave, fft_ws& ws,
                    const std::string& cache_dir) {
    lin_pack pack;
    double t0 = now_s();
    if (load_pack_cache(cache_dir, wave, pack)) {
        std::printf("pack: cache hit (%.2fs)\n", now_s() - t0);
        return pack;
    }
    pack = build_linearization(wave, ws);
    if (!cache_dir.empty()) store_pack_cache(cache_dir, pack);
    std::printf("pack: cache miss, built in %.2fs\n", now_s() - t0);
    return pack;
}

int cmd_simulate(const run_config& c) {
    grid g(c.n, c.box);
    fft_ws ws(g);
    model_params prm = params_from(c);
    noise_model nm = make_noise(g, kernel_from(c.kernel), c.length_scale,
                                c.normalize_beta, c.sigma, ws, c.kernel_file);
    field u0;
    std::vector<grid> pool;
    if (c.u0 == "wave") {
        u0 = make_wave(prm, g, 0.0, ws).u_star;
    } else if (c.u0 == "zero") {
        u0 = field(g);
    } else if (c.u0 == "file") {
        u0 = read_field_file(c.u0_file, pool);
        if (u0.g->n != g.n || u0.g->box != g.box)
            throw config_error("initial state grid does not match [grid]");
    } else {
        throw config_error("unknown u0 '" + c.u0 + "'");
    }
    stepper_config cfg{c.dt, scheme_from(c.scheme), c.t_end, c.record_stride};
    rng_stream rs(derive_seed(c.base_seed, 0, 0));
    double t0 = now_s();
    trajectory traj = simulate(u0, prm, nm, cfg, rs, ws, c.keep_states);
    std::printf("simulate: %zu records in %.2fs\n", traj.times.size(),
                now_s() - t0);

    std::filesystem::create_directories(c.dir);
    std::string echo = render_config(c);
    {
        std::string body = "t,l2,h1,h2,mixed_inf2,mixed_66\n";
        for (size_t i = 0; i < traj.times.size(); i++) {
            body += format_double(traj.times[i]) + "," +
                    format_double(traj.l2[i]) + "," +
                    format_double(traj.h1[i]) + "," +
                    format_double(traj.h2[i]) + "," +
                    format_double(traj.mixed_inf2[i]) + "," +
                    format_double(traj.mixed_66[i]) + "\n";
        }
        std::string h = write_hashed(c.dir + "/trajectory.csv", echo, body);
        append_manifest(c.dir, "trajectory.csv", h);
    }
    if (c.keep_states && !traj.states.empty()) {
        std::vector<double> bal = conservation_balance(traj, prm);
        std::string body = "t,residual\n";
        for (size_t i = 0; i < bal.size(); i++)
            body += format_double(traj.times[i]) + "," +
                    format_double(bal[i]) + "\n";
        std::string h = write_hashed(c.dir + "/balance.csv", echo, body);
        append_manifest(c.dir, "balance.csv", h);
        write_field_file(c.dir + "/state_final.bin", traj.states.back());
        write_field_csv(c.dir + "/state_final.csv", traj.states.back(), echo);
    }
    if (traj.blowup) {
        std::fprintf(stderr, "blowup at t = %g\n", traj.blowup_t);
        return 3;
    }
    std::printf("final t = %g  l2 = %.12g\n", traj.times.back(),
                traj.l2.back());
    return 0;
}

int cmd_spectrum(const run_config& c) {
    grid g(c.n, c.box);
    fft_ws ws(g);
    model_params prm = params_from(c);
    solitary_wave wave = make_wave(prm, g, 0.0, ws);
    lin_pack pack = timed_pack(wave, ws, c.dir + "/cache");

    std::filesystem::create_directories(c.dir);
    std::string echo = render_config(c);
    std::vector<cplx> sp = pack.spectrum;
    std::sort(sp.begin(), sp.end(), [](const cplx& a, const cplx& b) {
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() < b.imag();
    });
    std::string body = "re,im\n";
    for (const cplx& z : sp)
        body += format_double(z.real()) + "," + format_double(z.imag()) + "\n";
    std::string h = write_hashed(c.dir + "/spectrum.csv", echo, body);
    append_manifest(c.dir, "spectrum.csv", h);

    double cx = inner_real(pack.right_null, pack.u_star_x) /
                (lp_norm(pack.right_null, 2.0) * lp_norm(pack.u_star_x, 2.0));
    std::string sum;
    sum += "gap_b = " + format_double(pack.gap_b) + "\n";
    sum += "zero_abs = " + format_double(pack.zero_abs) + "\n";
    sum += "op_frob = " + format_double(pack.op_frob) + "\n";
    sum += "null_cosine = " + format_double(cx) + "\n";
    sum += "fit_M = " + format_double(pack.fit_M) + "\n";
    sum += "fit_a = " + format_double(pack.fit_a) + "\n";
    h = write_hashed(c.dir + "/spectrum_summary.txt", echo, sum);
    append_manifest(c.dir, "spectrum_summary.txt", h);
    std::printf("gap_b = %g  zero_abs = %g  fit_M = %g\n", pack.gap_b,
                pack.zero_abs, pack.fit_M);
    return 0;
}

int cmd_expand(const run_config& c) {
    grid g(c.n, c.box);
    fft_ws ws(g);
    model_params prm = params_from(c);
    solitary_wave wave = make_wave(prm, g, 0.0, ws);
    lin_pack pack = timed_pack(wave, ws, c.dir + "/cache");
    noise_model nm = make_noise(g, kernel_from(c.kernel), c.length_scale,
                                c.normalize_beta, c.sigma, ws, c.kernel_file);
    expansion_runner run(wave, pack, nm, c.dt, c.sigma);
    rng_stream rs(derive_seed(c.base_seed, 0, 0));
    field u = wave.u_star;
    expansion_state st;
    st.v1 = field(g);
    st.v2 = field(g);
    int n_steps = int(std::llround(c.t_end / c.dt));
    admissible_pair pinf(infty, 2.0), p66(6.0, 6.0);
    mixed_accum v1i(pinf, c.dt), v166(p66, c.dt), v2i(pinf, c.dt),
        v266(p66, c.dt), zi(pinf, c.dt), z66(p66, c.dt), zpi(pinf, c.dt),
        zp66(p66, c.dt);
    path_diag diag;
    field z(g), zp(g);
    auto record = [&]() {
        phase_decompose(st, pack);
        compute_residuals(u, st, wave, c.sigma, z, zp);
        diag.t.push_back(st.t);
        diag.a1.push_back(st.a1);
        diag.a2.push_back(st.a2);
        diag.w1n.push_back(lp_norm(st.w1, 2.0));
        diag.w2n.push_back(lp_norm(st.w2, 2.0));
        diag.zn.push_back(lp_norm(z, 2.0));
        diag.zpn.push_back(lp_norm(zp, 2.0));
        diag.v1_inf2.push_back(v1i.value());
        diag.v1_66.push_back(v166.value());
        diag.v2_inf2.push_back(v2i.value());
        diag.v2_66.push_back(v266.value());
        diag.z_inf2.push_back(zi.value());
        diag.z_66.push_back(z66.value());
        diag.zp_inf2.push_back(zpi.value());
        diag.zp_66.push_back(zp66.value());
    };
    v1i.add(st.v1);
    v166.add(st.v1);
    v2i.add(st.v2);
    v266.add(st.v2);
    compute_residuals(u, st, wave, c.sigma, z, zp);
    zi.add(z);
    z66.add(z);
    zpi.add(zp);
    zp66.add(zp);
    record();
    for (int n = 0; n < n_steps; n++) {
        run.step(u, st, rs, ws);
        v1i.add(st.v1);
        v166.add(st.v1);
        v2i.add(st.v2);
        v266.add(st.v2);
        compute_residuals(u, st, wave, c.sigma, z, zp);
        zi.add(z);
        z66.add(z);
        zpi.add(zp);
        zp66.add(zp);
        if ((n + 1) % c.record_stride == 0 || n + 1 == n_steps) record();
    }
    stop_caps caps{c.eps_sweep.empty() ? 0.3 : c.eps_sweep[0], c.sigma, 1.0};
    stopping_times st_times = detect_stopping(diag, caps);

    std::filesystem::create_directories(c.dir);
    std::string echo = render_config(c);
    std::string body =
        "t,a1,a2,w1,w2,z,zp,v1_inf2,v1_66,v2_inf2,v2_66,z_inf2,z_66,zp_inf2,"
        "zp_66\n";
    for (size_t i = 0; i < diag.t.size(); i++) {
        body += format_double(diag.t[i]) + "," + format_double(diag.a1[i]) +
                "," + format_double(diag.a2[i]) + "," +
                format_double(diag.w1n[i]) + "," + format_double(diag.w2n[i]) +
                "," + format_double(diag.zn[i]) + "," +
                format_double(diag.zpn[i]) + "," +
                format_double(diag.v1_inf2[i]) + "," +
                format_double(diag.v1_66[i]) + "," +
                format_double(diag.v2_inf2[i]) + "," +
                format_double(diag.v2_66[i]) + "," +
                format_double(diag.z_inf2[i]) + "," +
                format_double(diag.z_66[i]) + "," +
                format_double(diag.zp_inf2[i]) + "," +
                format_double(diag.zp_66[i]) + "\n";
    }
    std::string h = write_hashed(c.dir + "/expansion.csv", echo, body);
    append_manifest(c.dir, "expansion.csv", h);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  (unsigned long long)run.coupling_checksum());
    std::string sum;
    sum += "tau_v1 = " + format_double(st_times.tau_v1) + "\n";
    sum += "tau_v2 = " + format_double(st_times.tau_v2) + "\n";
    sum += "tau_z = " + format_double(st_times.tau_z) + "\n";
    sum += "tau_z_prime = " + format_double(st_times.tau_z_prime) + "\n";
    sum += "coupling_checksum = " + std::string(buf) + "\n";
    h = write_hashed(c.dir + "/expansion_summary.txt", echo, sum);
    append_manifest(c.dir, "expansion_summary.txt", h);
    std::printf("tau_z = %g  tau_z' = %g  checksum = %s\n", st_times.tau_z,
                st_times.tau_z_prime, buf);
    return 0;
}

int cmd_experiment(const run_config& c) {
    ensemble_spec spec = spec_from(c);
    double t0 = now_s();
    if (c.study == "diffusion") {
        diffusion_report r = run_phase_diffusion_study(spec);
        write_report(r, spec, c.dir);
        std::printf("diffusion: oracle_q = %g", r.oracle_q);
        for (size_t i = 0; i < r.sigmas.size(); i++)
            std::printf("  slope[%g] = %g (r2 %.4f)", r.sigmas[i],
                        r.slope_reg[i], r.r2[i]);
        std::printf("\n");
    } else if (c.study == "order") {
        order_report r = run_order_study(spec);
        write_report(r, spec, c.dir);
        std::printf("order: slope_z = %.3f  slope_zp = %.3f\n", r.slope_z,
                    r.slope_zp);
    } else if (c.study == "escape") {
        escape_report r = run_escape_study(spec);
        write_report(r, spec, c.dir);
        std::printf("escape: window_T = %.2f  fit_k = %.3f (r2 %.3f)\n",
                    r.window_T, r.fit_k, r.fit_r2);
        for (const escape_cell& cell : r.cells)
            std::printf("  sigma %.3f radius %.2f: %d/%d [%.3f, %.3f]%s\n",
                        cell.sigma, cell.radius, cell.n_escaped, cell.n,
                        cell.ci.lo, cell.ci.hi,
                        cell.censored ? " censored" : "");
    } else if (c.study == "fluctuation") {
        fluctuation_report r = run_fluctuation_study(spec);
        write_report(r, spec, c.dir);
        std::printf(
            "fluctuation: w1_slope = %.4f  w2_exp = %.3f  v2_exp = %.3f\n",
            r.w1_exact_slope, r.w2_exponent, r.v2_exponent);
    } else {
        throw config_error("unknown study '" + c.study + "'");
    }
    std::printf("experiment done in %.1fs, reports in %s\n", now_s() - t0,
                c.dir.c_str());
    return 0;
}

int cmd_verify(const std::string& dir) {
    std::vector<std::string> bad = verify_dir(dir);
    if (bad.empty()) {
        std::printf("%s: all hashes match\n", dir.c_str());
        return 0;
    }
    for (const std::string& f : bad)
        std::fprintf(stderr, "hash mismatch: %s\n", f.c_str());
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral SPFNLS simulator and statistics driver"};
    app.require_subcommand(1);

    std::string config_path, verify_target;
    std::vector<std::string> sets;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "INI config file");
        sub->add_option("--set", sets,
                        "override, section.key=value (repeatable)");
    };
    CLI::App* s_sim = app.add_subcommand("simulate", "integrate one path");
    CLI::App* s_spec =
        app.add_subcommand("spectrum", "linearization spectrum and bounds");
    CLI::App* s_exp =
        app.add_subcommand("expand", "coupled second order expansion");
    CLI::App* s_study = app.add_subcommand("experiment", "ensemble studies");
    CLI::App* s_ver = app.add_subcommand("verify", "re-check output hashes");
    CLI::App* s_def = app.add_subcommand("defaults", "print default config");
    add_common(s_sim);
    add_common(s_spec);
    add_common(s_exp);
    add_common(s_study);
    s_ver->add_option("dir", verify_target, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (s_def->parsed()) {
            std::fputs(render_config(run_config{}).c_str(), stdout);
            return 0;
        }
        if (s_ver->parsed()) return cmd_verify(verify_target);
        run_config c = assemble(config_path, sets);
        if (s_sim->parsed()) return cmd_simulate(c);
        if (s_spec->parsed()) return cmd_spectrum(c);
        if (s_exp->parsed()) return cmd_expand(c);
        if (s_study->parsed()) return cmd_experiment(c);
    } catch (const config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const blowup_error& e) {
        std::fprintf(stderr, "blowup at t = %g\n", e.t);
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
