#include <cmath>

#include "doctest.h"
#include "spf/expansion.hh"

using namespace spf;

static const grid& tg() {
    static grid g(256, 60.0);
    return g;
}
static fft_ws& tws() {
    static fft_ws ws(tg());
    return ws;
}
static const solitary_wave& twave() {
    static solitary_wave w =
        make_wave(make_params(1.0, 0.15, 1.0, 1.05, 8.0), tg(), 0.0, tws());
    return w;
}
static const lin_pack& tpack() {
    static lin_pack p = cached_linearization(twave(), tws(), "unit_cache");
    return p;
}
static noise_model tnoise() {
    return make_noise(tg(), kernel_kind::gaussian, 1.0, false, 1.0, tws());
}

static expansion_state zero_state() {
    expansion_state st;
    st.v1 = field(tg());
    st.v2 = field(tg());
    return st;
}

TEST_CASE("coupling checksum pins the consumption order") {
    noise_model nm = tnoise();
    expansion_runner ra(twave(), tpack(), nm, 1e-3, 0.1);
    expansion_runner rb(twave(), tpack(), nm, 1e-3, 0.1);
    field ua = twave().u_star, ub = twave().u_star;
    expansion_state sa = zero_state(), sb = zero_state();
    rng_stream rsa(derive_seed(5, 0, 0)), rsb(derive_seed(5, 0, 1));
    for (int n = 0; n < 3; n++) {
        ra.step(ua, sa, rsa, tws());
        rb.step(ub, sb, rsb, tws());
    }
    // order fingerprint is data independent
    CHECK(ra.coupling_checksum() == rb.coupling_checksum());
    // replay the documented order: u, v2 quadratic, v1 kick, v1 linear,
    // v2 linear, v2 trapezoid close
    uint64_t h = 1469598103934665603ULL;
    for (uint64_t n = 0; n < 3; n++)
        for (uint64_t tag = 1; tag <= 6; tag++) h = checksum_consume(h, n, tag);
    CHECK(ra.coupling_checksum() == h);
    uint64_t swapped = 1469598103934665603ULL;
    for (uint64_t n = 0; n < 3; n++) {
        swapped = checksum_consume(swapped, n, 1);
        swapped = checksum_consume(swapped, n, 3);  // v1 kick before v2 quad
        swapped = checksum_consume(swapped, n, 2);
        for (uint64_t tag = 4; tag <= 6; tag++)
            swapped = checksum_consume(swapped, n, tag);
    }
    CHECK(swapped != h);
}

TEST_CASE("one step of the hierarchy has the closed form") {
    noise_model nm = tnoise();
    double dt = 1e-3, b2 = nm.beta * nm.beta;
    expansion_runner run(twave(), tpack(), nm, dt, 0.1);
    field u = twave().u_star;
    expansion_state st = zero_state();
    rng_stream rs(derive_seed(19, 0, 0));
    field W = sample_increment(nm, dt, rs, tws());
    run.step_with(u, st, W, tws());

    const field& us = twave().u_star;
    const cplx I(0.0, 1.0);
    lin_stepper ls(tg(), twave(), dt);
    field v1(tg());
    for (int j = 0; j < tg().n; j++)
        v1.v[j] = -I * us.v[j] * W.v[j].real();
    ls.step(v1, tws());
    double e1 = 0.0;
    for (int j = 0; j < tg().n; j++)
        e1 = std::max(e1, std::abs(v1.v[j] - st.v1.v[j]));
    CHECK(e1 < 1e-14);

    auto forcing = [&](const field& v) {
        field out(tg());
        double k = twave().prm.kappa;
        for (int j = 0; j < tg().n; j++) {
            cplx vv = v.v[j], uu = us.v[j];
            out.v[j] =
                I * k * (2.0 * std::norm(vv) * uu + vv * vv * std::conj(uu)) -
                0.5 * b2 * uu;
        }
        return out;
    };
    field v2(tg());
    field f0 = forcing(field(tg()));
    for (int j = 0; j < tg().n; j++) {
        double w = W.v[j].real();
        v2.v[j] = -0.5 * us.v[j] * (w * w - b2 * dt) + 0.5 * dt * f0.v[j];
    }
    ls.step(v2, tws());
    field f1 = forcing(v1);
    for (int j = 0; j < tg().n; j++) v2.v[j] += 0.5 * dt * f1.v[j];
    double e2 = 0.0;
    for (int j = 0; j < tg().n; j++)
        e2 = std::max(e2, std::abs(v2.v[j] - st.v2.v[j]));
    CHECK(e2 < 1e-14);
}

TEST_CASE("the correction hierarchy never reads sigma") {
    noise_model nm = tnoise();
    expansion_runner ra(twave(), tpack(), nm, 1e-3, 0.05);
    expansion_runner rb(twave(), tpack(), nm, 1e-3, 0.2);
    field ua, ub;  // detached: no u coupling
    expansion_state sa = zero_state(), sb = zero_state();
    rng_stream rs(derive_seed(23, 0, 0));
    for (int n = 0; n < 20; n++) {
        field W = sample_increment(nm, 1e-3, rs, tws());
        ra.step_with(ua, sa, W, tws());
        rb.step_with(ub, sb, W, tws());
    }
    double d = 0.0;
    for (int j = 0; j < tg().n; j++) {
        d = std::max(d, std::abs(sa.v1.v[j] - sb.v1.v[j]));
        d = std::max(d, std::abs(sa.v2.v[j] - sb.v2.v[j]));
    }
    CHECK(d == 0.0);
}

TEST_CASE("the mean of v1 follows the deterministic semigroup") {
    noise_model nm = tnoise();
    double dt = 2e-3;
    int n_steps = 250, n_paths = 200;
    rng_stream rs0(derive_seed(29, 0, 0));
    field v10(tg());
    for (int j = 0; j < tg().n; j++) v10.v[j] = cplx(rs0.gauss(), rs0.gauss());
    v10 = project_pi(v10, tpack());
    double nv = lp_norm(v10, 2.0);
    for (cplx& z : v10.v) z /= nv;

    field mean(tg());
    for (int p = 0; p < n_paths; p++) {
        expansion_runner run(twave(), tpack(), nm, dt, 0.1);
        field u;
        expansion_state st = zero_state();
        st.v1 = v10;
        rng_stream rs(derive_seed(29, 1, p));
        for (int n = 0; n < n_steps; n++) run.step(u, st, rs, tws());
        for (int j = 0; j < tg().n; j++) mean.v[j] += st.v1.v[j];
    }
    for (cplx& z : mean.v) z /= double(n_paths);
    lin_stepper ls(tg(), twave(), dt);
    field det = v10;
    for (int n = 0; n < n_steps; n++) ls.step(det, tws());
    double d = 0.0;
    for (int j = 0; j < tg().n; j++) d += std::norm(mean.v[j] - det.v[j]);
    d = std::sqrt(d * tg().dx);
    CHECK(d / lp_norm(det, 2.0) < 0.15);
}

TEST_CASE("phase decomposition reconstructs the fields") {
    noise_model nm = tnoise();
    expansion_runner run(twave(), tpack(), nm, 1e-3, 0.1);
    field u = twave().u_star;
    expansion_state st = zero_state();
    rng_stream rs(derive_seed(43, 0, 0));
    for (int n = 0; n < 50; n++) run.step(u, st, rs, tws());
    phase_decompose(st, tpack());
    const lin_pack& p = tpack();
    double d = 0.0;
    for (int j = 0; j < tg().n; j++) {
        cplx r1 = st.v1.v[j] - st.a1 * p.u_star_x.v[j] - st.w1.v[j];
        cplx r2 = st.v2.v[j] - st.a2 * p.u_star_x.v[j] -
                  0.5 * st.a1 * st.a1 * p.u_star_xx.v[j] - st.w2.v[j];
        d = std::max(d, std::max(std::abs(r1), std::abs(r2)));
    }
    CHECK(d < 1e-12);
    CHECK(std::fabs(phase_functional(st.w1, p)) < 1e-10);
    CHECK(std::fabs(phase_functional(st.w2, p)) < 1e-10);
}

TEST_CASE("residual definitions are consistent") {
    noise_model nm = tnoise();
    double sigma = 0.07;
    expansion_runner run(twave(), tpack(), nm, 1e-3, sigma);
    field u = twave().u_star;
    expansion_state st = zero_state();
    rng_stream rs(derive_seed(47, 0, 0));
    for (int n = 0; n < 20; n++) run.step(u, st, rs, tws());
    field z(tg()), zp(tg());
    compute_residuals(u, st, twave(), sigma, z, zp);
    double d = 0.0;
    for (int j = 0; j < tg().n; j++) {
        cplx want = zp.v[j] - sigma * sigma * st.v2.v[j];
        d = std::max(d, std::abs(z.v[j] - want));
    }
    CHECK(d < 1e-15);
}

TEST_CASE("orbital distance recovers a pure translation") {
    double a = 0.83;
    field u = translate(twave().u_star, a, tws());
    orbital_fit fit = orbital_distance(u, twave().prm, tws());
    CHECK(std::fabs(fit.shift - a) < 1e-3);
    CHECK(fit.dist < 1e-6);
    field r = resampled_wave(twave().prm, tg(), a);
    double d = 0.0;
    for (int j = 0; j < tg().n; j++) d += std::norm(u.v[j] - r.v[j]);
    CHECK(std::sqrt(d * tg().dx) < 1e-8);
}

TEST_CASE("reset frame recenters and restarts the hierarchy") {
    double a = 0.4, sigma = 0.1;
    field u = translate(twave().u_star, a, tws());
    expansion_state st = zero_state();
    orbital_fit fit = orbital_distance(u, twave().prm, tws());
    reset_frame(u, st, fit.shift, twave(), sigma, tws());
    orbital_fit after = orbital_distance(u, twave().prm, tws());
    CHECK(std::fabs(after.shift) < 1e-3);
    double d = 0.0;
    for (int j = 0; j < tg().n; j++) {
        cplx want = (u.v[j] - twave().u_star.v[j]) / sigma;
        d = std::max(d, std::abs(st.v1.v[j] - want));
    }
    CHECK(d < 1e-12);
    CHECK(lp_norm(st.v2, 2.0) == 0.0);
}

TEST_CASE("stopping times trigger at the right caps") {
    path_diag d;
    for (int i = 0; i <= 10; i++) {
        double t = 0.5 * i;
        d.t.push_back(t);
        d.a1.push_back(0.0);
        d.a2.push_back(0.0);
        d.w1n.push_back(0.0);
        d.w2n.push_back(0.0);
        d.zn.push_back(0.0);
        d.zpn.push_back(0.0);
        d.v1_inf2.push_back(0.9 * t);       // crosses eps/sigma = 3 past t = 3.33
        d.v1_66.push_back(0.0);
        d.v2_inf2.push_back(0.0);
        d.v2_66.push_back(1.9 * t);         // crosses (eps/sigma)^2 = 9 before t = 5
        d.z_inf2.push_back(0.0);
        d.z_66.push_back(0.0);              // never crosses
        d.zp_inf2.push_back(0.05 * t);      // crosses 0.09 at t = 1.8
        d.zp_66.push_back(0.0);
    }
    stop_caps caps{0.3, 0.1, 1.0};
    stopping_times st = detect_stopping(d, caps);
    CHECK(st.tau_v1 == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(st.tau_v2 == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(st.tau_z == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(st.tau_z_prime == doctest::Approx(2.0).epsilon(1e-12));
}
