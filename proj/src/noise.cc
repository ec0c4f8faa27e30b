#include "spf/noise.hh"

#include <cmath>
#include <fstream>

namespace spf {

uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

uint64_t derive_seed(uint64_t base, uint64_t sweep, uint64_t path) {
    uint64_t s = base;
    uint64_t h = splitmix64(s);
    s = h ^ (sweep * 0xA24BAED4963EE407ULL);
    h = splitmix64(s);
    s = h ^ (path * 0x9FB21C651E98DF25ULL);
    return splitmix64(s);
}

double rng_stream::gauss() {
    if (have) {
        have = false;
        return spare;
    }
    // (k+1/2)/2^53 keeps u strictly inside (0,1)
    double u1 = ((eng() >> 11) + 0.5) * 0x1.0p-53;
    double u2 = ((eng() >> 11) + 0.5) * 0x1.0p-53;
    double r = std::sqrt(-2.0 * std::log(u1));
    double w = 2.0 * M_PI * u2;
    spare = r * std::sin(w);
    have = true;
    return r * std::cos(w);
}

noise_model make_noise(const grid& g, kernel_kind kind, double length_scale,
                       bool normalize_beta, double sigma, fft_ws& ws,
                       const std::string& file_path) {
    if (!(length_scale > 0.0))
        throw std::invalid_argument("noise: length_scale <= 0");
    noise_model nm;
    nm.phi = field(g);
    nm.sigma = sigma;
    if (kind == kernel_kind::gaussian) {
        // (pi l^2)^{-1/4} exp(-x^2/2l^2) has unit L2 norm on the line
        double a = std::pow(M_PI * length_scale * length_scale, -0.25);
        for (int j = 0; j < g.n; j++)
            nm.phi.v[j] = a * std::exp(-g.x[j] * g.x[j] /
                                       (2.0 * length_scale * length_scale));
    } else if (kind == kernel_kind::box) {
        double a = 1.0 / std::sqrt(length_scale);
        for (int j = 0; j < g.n; j++)
            nm.phi.v[j] = std::fabs(g.x[j]) <= 0.5 * length_scale ? a : 0.0;
    } else {
        std::ifstream in(file_path, std::ios::binary);
        if (!in) throw std::invalid_argument("noise: cannot open kernel file");
        uint64_t n = 0;
        double box = 0.0;
        in.read(reinterpret_cast<char*>(&n), 8);
        in.read(reinterpret_cast<char*>(&box), 8);
        if (!in || n != uint64_t(g.n) || box != g.box)
            throw std::invalid_argument("noise: kernel file grid mismatch");
        std::vector<double> buf(2 * g.n);
        in.read(reinterpret_cast<char*>(buf.data()), 16 * g.n);
        if (!in) throw std::invalid_argument("noise: short kernel file");
        for (int j = 0; j < g.n; j++) nm.phi.v[j] = buf[2 * j];  // real part
    }
    double b2 = 0.0;
    for (int j = 0; j < g.n; j++) b2 += std::norm(nm.phi.v[j]);
    b2 *= g.dx;
    if (!(b2 > 0.0)) throw std::invalid_argument("noise: kernel is zero");
    if (normalize_beta) {
        double inv = 1.0 / std::sqrt(b2);
        for (int j = 0; j < g.n; j++) nm.phi.v[j] *= inv;
        b2 = 1.0;
    }
    nm.beta = std::sqrt(b2);
    // wrap so index 0 holds phi(0), then transform
    nm.phi_hat.resize(g.n);
    std::vector<cplx> w(g.n);
    for (int j = 0; j < g.n; j++) w[j] = nm.phi.v[(j + g.n / 2) % g.n];
    for (int j = 0; j < g.n; j++) nm.phi_hat[j] = w[j];
    ws.fwd(nm.phi_hat.data());
    return nm;
}

field apply_phi(const field& f, const noise_model& nm, fft_ws& ws) {
    check_same_grid(f, nm.phi);
    field out = f;
    ws.fwd(out);
    for (int j = 0; j < out.n(); j++) out.v[j] *= nm.phi_hat[j];
    ws.bwd(out);
    double dx = f.dx();
    for (int j = 0; j < out.n(); j++) out.v[j] *= dx;
    return out;
}

field sample_increment(const noise_model& nm, double dt, rng_stream& rs,
                       fft_ws& ws) {
    const grid& g = *nm.phi.g;
    field gsamp(g);
    double sd = std::sqrt(dt / g.dx);
    for (int j = 0; j < g.n; j++) gsamp.v[j] = sd * rs.gauss();
    field w = apply_phi(gsamp, nm, ws);
    for (int j = 0; j < g.n; j++) w.v[j] = cplx(w.v[j].real(), 0.0);
    return w;
}

double ito_correction_coefficient(const noise_model& nm) {
    return nm.beta * nm.beta;
}

}  // namespace spf
