#include "spf/norms.hh"

#include <cmath>
#include <stdexcept>

namespace spf {

admissible_pair::admissible_pair(double r_, double p_) : r(r_), p(p_) {
    if (!(r >= 4.0)) throw std::invalid_argument("admissible pair: r < 4");
    double lhs = (r == infty ? 0.0 : 2.0 / r) + (p == infty ? 0.0 : 1.0 / p);
    if (std::fabs(lhs - 0.5) > 1e-12)
        throw std::invalid_argument("admissible pair: 2/r + 1/p != 1/2");
}

double lp_norm(const field& f, double p) {
    if (p == infty) {
        double m = 0.0;
        for (const cplx& z : f.v) m = std::max(m, std::abs(z));
        return m;
    }
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p < 1");
    double s = 0.0;
    for (const cplx& z : f.v) s += std::pow(std::abs(z), p);
    return std::pow(s * f.dx(), 1.0 / p);
}

double hs_norm(const field& f, double s, fft_ws& ws) {
    field t = f;
    ws.fwd(t);
    const grid& g = *f.g;
    // Parseval: ||f||_{L2}^2 = (dx/n) sum |fhat|^2 for the unnormalized DFT
    double acc = 0.0;
    for (int j = 0; j < g.n; j++) {
        double k2 = 4.0 * M_PI * M_PI * g.xi[j] * g.xi[j];
        acc += std::pow(1.0 + k2, s) * std::norm(t.v[j]);
    }
    return std::sqrt(acc * g.dx / g.n);
}

double inner_real(const field& a, const field& b) {
    check_same_grid(a, b);
    double s = 0.0;
    for (int j = 0; j < a.n(); j++)
        s += a.v[j].real() * b.v[j].real() + a.v[j].imag() * b.v[j].imag();
    return s * a.dx();
}

double mixed_norm(const std::vector<field>& path, const admissible_pair& pr,
                  double t0, double t1) {
    if (path.empty()) return 0.0;
    if (pr.r == infty) {
        double m = 0.0;
        for (const field& f : path) m = std::max(m, lp_norm(f, pr.p));
        return m;
    }
    double dt = path.size() > 1 ? (t1 - t0) / (path.size() - 1) : (t1 - t0);
    double s = 0.0;
    for (size_t i = 0; i + 1 < path.size(); i++)
        s += std::pow(lp_norm(path[i], pr.p), pr.r) * dt;
    return std::pow(s, 1.0 / pr.r);
}

void mixed_accum::add(const field& f) {
    double q = lp_norm(f, p);
    if (r == infty)
        acc = std::max(acc, q);
    else
        acc += std::pow(q, r) * dt;
}

double mixed_accum::value() const {
    return r == infty ? acc : std::pow(acc, 1.0 / r);
}

}  // namespace spf
