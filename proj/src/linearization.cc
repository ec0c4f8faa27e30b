#include "spf/linearization.hh"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <Eigen/Dense>
#include <lapacke.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "spf/noise.hh"

namespace spf {

void apply_lin(const field& vin, field& vout, const solitary_wave& wave,
               fft_ws& ws) {
    check_same_grid(vin, wave.u_star);
    const grid& g = *vin.g;
    vout = vin;
    ws.fwd(vout);
    for (int j = 0; j < g.n; j++) {
        double lap = -4.0 * M_PI * M_PI * g.xi[j] * g.xi[j];
        vout.v[j] *= cplx(0.0, lap);
    }
    ws.bwd(vout);
    const model_params& p = wave.prm;
    const cplx I(0.0, 1.0);
    for (int j = 0; j < g.n; j++) {
        cplx v = vin.v[j], us = wave.u_star.v[j];
        vout.v[j] += -I * p.nu * v -
                     p.eps * (p.gamma * v - p.mu * std::conj(v)) +
                     I * p.kappa *
                         (2.0 * std::norm(us) * v + us * us * std::conj(v));
    }
}

static Eigen::MatrixXd assemble_matrix(const solitary_wave& wave, fft_ws& ws) {
    const grid& g = *wave.u_star.g;
    int n = g.n;
    Eigen::MatrixXd M(2 * n, 2 * n);
    field e(g), r(g);
    for (int j = 0; j < n; j++) {
        e.v.assign(n, cplx(0.0, 0.0));
        e.v[j] = cplx(1.0, 0.0);
        apply_lin(e, r, wave, ws);
        for (int i = 0; i < n; i++) {
            M(i, j) = r.v[i].real();
            M(n + i, j) = r.v[i].imag();
        }
        e.v[j] = cplx(0.0, 1.0);
        apply_lin(e, r, wave, ws);
        for (int i = 0; i < n; i++) {
            M(i, n + j) = r.v[i].real();
            M(n + i, n + j) = r.v[i].imag();
        }
    }
    return M;
}

static field vec_to_field(const Eigen::VectorXd& v, const grid& g) {
    field f(g);
    for (int j = 0; j < g.n; j++) f.v[j] = cplx(v[j], v[g.n + j]);
    return f;
}

lin_pack build_linearization(const solitary_wave& wave, fft_ws& ws) {
    const grid& g = *wave.u_star.g;
    int n = g.n, n2 = 2 * g.n;
    lin_pack pk;
    pk.g = &g;
    pk.prm = wave.prm;
    pk.u_star = wave.u_star;
    pk.u_star_x = wave.u_star_x;
    pk.u_star_xx = wave.u_star_xx;

    Eigen::MatrixXd M = assemble_matrix(wave, ws);
    pk.op_frob = M.norm();

    // eigenvalues only; dgeev destroys its input
    {
        Eigen::MatrixXd A = M;
        std::vector<double> wr(n2), wi(n2);
        lapack_int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n2,
                                        A.data(), n2, wr.data(), wi.data(),
                                        nullptr, 1, nullptr, 1);
        if (info != 0) throw std::runtime_error("dgeev failed");
        pk.spectrum.resize(n2);
        for (int i = 0; i < n2; i++) pk.spectrum[i] = cplx(wr[i], wi[i]);
    }

    // zero-mode pair by inverse iteration around the origin
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(
        M - 1e-10 * Eigen::MatrixXd::Identity(n2, n2));
    Eigen::VectorXd r = Eigen::VectorXd::Ones(n2), l = Eigen::VectorXd::Ones(n2);
    for (int it = 0; it < 6; it++) {
        r = lu.solve(r);
        r /= r.norm();
        l = lu.transpose().solve(l);
        l /= l.norm();
    }
    pk.zero_abs = (M * r).norm() / r.norm();
    pk.right_null = vec_to_field(r, g);
    pk.left_null = vec_to_field(l, g);
    {
        double nr = lp_norm(pk.right_null, 2.0);
        double sg = inner_real(pk.right_null, pk.u_star_x) >= 0.0 ? 1.0 : -1.0;
        for (cplx& z : pk.right_null.v) z *= sg / nr;
        double pair = inner_real(pk.u_star_x, pk.left_null);
        if (std::fabs(pair) < 1e-300)
            throw std::runtime_error("left null vector orthogonal to u*_x");
        for (cplx& z : pk.left_null.v) z /= pair;
    }

    // spectral gap over everything except the zero pair
    {
        int i0 = 0;
        double best = std::abs(pk.spectrum[0]);
        for (int i = 1; i < n2; i++)
            if (std::abs(pk.spectrum[i]) < best) {
                best = std::abs(pk.spectrum[i]);
                i0 = i;
            }
        double mre = -infty;
        for (int i = 0; i < n2; i++)
            if (i != i0) mre = std::max(mre, pk.spectrum[i].real());
        pk.gap_b = -mre;
    }

    // decay prefactor: max over seeded probes and a coarse t mesh of
    // ||P(t) Pi f|| e^{at} with a the measured gap
    {
        pk.fit_a = pk.gap_b;
        const int n_probe = 64;
        const double t_end = 20.0, dtf = 0.01;
        int per = int(std::llround(0.25 / dtf));
        solitary_wave sw{pk.u_star, pk.u_star_x, pk.u_star_xx, pk.prm};
        lin_stepper ls(g, sw, dtf);
        std::vector<field> probes;
        for (int k = 0; k < n_probe; k++) {
            rng_stream rs(derive_seed(424242, 0, k));
            field f(g);
            for (int j = 0; j < n; j++) f.v[j] = cplx(rs.gauss(), rs.gauss());
            double a1 = inner_real(f, pk.left_null);
            for (int j = 0; j < n; j++) f.v[j] -= a1 * pk.u_star_x.v[j];
            double nf = lp_norm(f, 2.0);
            for (cplx& z : f.v) z /= nf;
            probes.push_back(f);
        }
        double mx = 1.0;
        for (int c = 1; c <= int(t_end / 0.25 + 0.5); c++) {
            for (int s = 0; s < per; s++) ls.step_block(probes, ws);
            double t = c * 0.25;
            double ea = std::exp(pk.fit_a * t);
            for (const field& f : probes)
                mx = std::max(mx, lp_norm(f, 2.0) * ea);
        }
        pk.fit_M = mx;
    }
    return pk;
}

static uint64_t key_hash(const solitary_wave& wave) {
    const grid& g = *wave.u_star.g;
    double buf[9] = {double(g.n), g.box,          wave.prm.nu,
                     wave.prm.eps, wave.prm.gamma, wave.prm.mu,
                     wave.prm.kappa, wave.prm.theta, wave.prm.wave_scale};
    const unsigned char* p = reinterpret_cast<const unsigned char*>(buf);
    uint64_t h = 1469598103934665603ULL;
    for (size_t i = 0; i < sizeof(buf); i++) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

static std::string key_name(const solitary_wave& wave) {
    char s[32];
    std::snprintf(s, sizeof(s), "pack_%016llx.bin",
                  (unsigned long long)key_hash(wave));
    return s;
}

static void put_field(std::ofstream& o, const field& f) {
    o.write(reinterpret_cast<const char*>(f.v.data()), 16 * f.n());
}

static void get_field(std::ifstream& in, field& f) {
    in.read(reinterpret_cast<char*>(f.v.data()), 16 * f.n());
}

bool load_pack_cache(const std::string& dir, const solitary_wave& wave,
                     lin_pack& pack) {
    std::ifstream in(dir + "/" + key_name(wave), std::ios::binary);
    if (!in) return false;
    char magic[8];
    in.read(magic, 8);
    if (std::string(magic, 8) != "SPFLPK1\n") return false;
    uint64_t n = 0;
    double box = 0.0;
    in.read(reinterpret_cast<char*>(&n), 8);
    in.read(reinterpret_cast<char*>(&box), 8);
    const grid& g = *wave.u_star.g;
    if (n != uint64_t(g.n) || box != g.box) return false;
    pack.g = &g;
    pack.prm = wave.prm;
    pack.spectrum.resize(2 * g.n);
    in.read(reinterpret_cast<char*>(pack.spectrum.data()), 32 * g.n);
    pack.right_null = field(g);
    pack.left_null = field(g);
    pack.u_star = field(g);
    pack.u_star_x = field(g);
    pack.u_star_xx = field(g);
    get_field(in, pack.right_null);
    get_field(in, pack.left_null);
    get_field(in, pack.u_star);
    get_field(in, pack.u_star_x);
    get_field(in, pack.u_star_xx);
    double sc[5];
    in.read(reinterpret_cast<char*>(sc), 40);
    if (!in) return false;
    pack.gap_b = sc[0];
    pack.fit_M = sc[1];
    pack.fit_a = sc[2];
    pack.op_frob = sc[3];
    pack.zero_abs = sc[4];
    return true;
}

void store_pack_cache(const std::string& dir, const lin_pack& pack) {
    std::filesystem::create_directories(dir);
    solitary_wave sw{pack.u_star, pack.u_star_x, pack.u_star_xx, pack.prm};
    std::string name = dir + "/" + key_name(sw);
    std::string tmp = name + ".tmp";
    {
        std::ofstream o(tmp, std::ios::binary);
        o.write("SPFLPK1\n", 8);
        uint64_t n = pack.g->n;
        double box = pack.g->box;
        o.write(reinterpret_cast<const char*>(&n), 8);
        o.write(reinterpret_cast<const char*>(&box), 8);
        o.write(reinterpret_cast<const char*>(pack.spectrum.data()),
                32 * pack.g->n);
        put_field(o, pack.right_null);
        put_field(o, pack.left_null);
        put_field(o, pack.u_star);
        put_field(o, pack.u_star_x);
        put_field(o, pack.u_star_xx);
        double sc[5] = {pack.gap_b, pack.fit_M, pack.fit_a, pack.op_frob,
                        pack.zero_abs};
        o.write(reinterpret_cast<const char*>(sc), 40);
        if (!o) throw std::runtime_error("pack cache write failed");
    }
    std::filesystem::rename(tmp, name);
}

lin_pack cached_linearization(const solitary_wave& wave, fft_ws& ws,
                              const std::string& cache_dir) {
    lin_pack pk;
    if (!cache_dir.empty() && load_pack_cache(cache_dir, wave, pk)) return pk;
    pk = build_linearization(wave, ws);
    if (!cache_dir.empty()) store_pack_cache(cache_dir, pk);
    return pk;
}

double phase_functional(const field& f, const lin_pack& pack) {
    return inner_real(f, pack.left_null);
}

field project_pi0(const field& f, const lin_pack& pack) {
    double a = phase_functional(f, pack);
    field out(*f.g);
    for (int j = 0; j < f.n(); j++) out.v[j] = a * pack.u_star_x.v[j];
    return out;
}

field project_pi(const field& f, const lin_pack& pack) {
    double a = phase_functional(f, pack);
    field out = f;
    for (int j = 0; j < f.n(); j++) out.v[j] -= a * pack.u_star_x.v[j];
    return out;
}

lin_stepper::lin_stepper(const grid& g, const solitary_wave& wave, double dt)
    : g_(&g), dt_(dt), mA2(g.n), E11(g.n), E12(g.n), E21(g.n), E22(g.n) {
    const model_params& p = wave.prm;
    for (int j = 0; j < g.n; j++) {
        double lap = -4.0 * M_PI * M_PI * g.xi[j] * g.xi[j];
        mA2[j] = std::polar(1.0, (lap - p.nu) * 0.5 * dt);
        cplx us = wave.u_star.v[j];
        double rho = std::norm(us);
        cplx cc = us * us;
        double m11 = -p.kappa * cc.imag() - p.eps * (p.gamma - p.mu);
        double m12 = -p.kappa * (2.0 * rho - cc.real());
        double m21 = p.kappa * (2.0 * rho + cc.real());
        double m22 = p.kappa * cc.imag() - p.eps * (p.gamma + p.mu);
        double tr2 = 0.5 * (m11 + m22);
        double b11 = m11 - tr2;
        double d2 = b11 * b11 + m12 * m21;
        double z = std::sqrt(std::fabs(d2)) * dt;
        double ch, sh;
        if (d2 > 0.0) {
            ch = std::cosh(z);
            sh = z > 1e-12 ? std::sinh(z) / z : 1.0;
        } else {
            ch = std::cos(z);
            sh = z > 1e-12 ? std::sin(z) / z : 1.0;
        }
        double et = std::exp(tr2 * dt);
        E11[j] = et * (ch + sh * dt * b11);
        E12[j] = et * sh * dt * m12;
        E21[j] = et * sh * dt * m21;
        E22[j] = et * (ch - sh * dt * b11);
    }
}

void lin_stepper::step(field& v, fft_ws& ws) {
    ws.fwd(v);
    for (int j = 0; j < v.n(); j++) v.v[j] *= mA2[j];
    ws.bwd(v);
    for (int j = 0; j < v.n(); j++) {
        double p = v.v[j].real(), q = v.v[j].imag();
        v.v[j] = cplx(E11[j] * p + E12[j] * q, E21[j] * p + E22[j] * q);
    }
    ws.fwd(v);
    for (int j = 0; j < v.n(); j++) v.v[j] *= mA2[j];
    ws.bwd(v);
}

void lin_stepper::step_block(std::vector<field>& vs, fft_ws& ws) {
    for (field& v : vs) step(v, ws);
}

field apply_semigroup(const field& f, double t, const lin_pack& pack,
                      semi_mode mode, fft_ws& ws, double dt) {
    if (t < 0.0) throw std::invalid_argument("semigroup: t < 0");
    if (t == 0.0) return f;
    solitary_wave sw{pack.u_star, pack.u_star_x, pack.u_star_xx, pack.prm};
    if (mode == semi_mode::timestep) {
        int ns = std::max<int>(1, int(std::llround(t / dt)));
        lin_stepper ls(*f.g, sw, t / ns);
        field v = f;
        for (int s = 0; s < ns; s++) ls.step(v, ws);
        return v;
    }
    const grid& g = *f.g;
    if (g.n > 512)
        throw std::invalid_argument("matrix_exp mode limited to n <= 512");
    Eigen::MatrixXd M = assemble_matrix(sw, ws);
    Eigen::MatrixXd E = (t * M).exp();
    Eigen::VectorXd v(2 * g.n);
    for (int j = 0; j < g.n; j++) {
        v[j] = f.v[j].real();
        v[g.n + j] = f.v[j].imag();
    }
    Eigen::VectorXd w = E * v;
    return vec_to_field(w, g);
}

double empirical_strichartz(const lin_pack& pack, const admissible_pair& pr,
                            int n_samples, double T, uint64_t seed,
                            fft_ws& ws, double dt) {
    const grid& g = *pack.g;
    solitary_wave sw{pack.u_star, pack.u_star_x, pack.u_star_xx, pack.prm};
    lin_stepper ls(g, sw, dt);
    int ns = int(std::llround(T / dt));
    double best = 0.0;
    for (int k = 0; k < n_samples; k++) {
        rng_stream rs(derive_seed(seed, 1, k));
        field f(g);
        for (int j = 0; j < g.n; j++) f.v[j] = cplx(rs.gauss(), rs.gauss());
        f = project_pi(f, pack);
        double nf = lp_norm(f, 2.0);
        for (cplx& z : f.v) z /= nf;
        mixed_accum acc(pr, dt);
        acc.add(f);
        for (int s = 0; s < ns; s++) {
            ls.step(f, ws);
            acc.add(f);
        }
        best = std::max(best, acc.value());
    }
    return best;
}

}  // namespace spf
