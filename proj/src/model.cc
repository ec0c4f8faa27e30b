#include "spf/model.hh"

#include <cmath>

namespace spf {

model_params make_params(double nu, double eps, double gamma, double mu,
                         double kappa) {
    if (!(kappa > 0.0)) throw std::invalid_argument("params: kappa <= 0");
    if (eps < 0.0) throw std::invalid_argument("params: eps < 0");
    if (!(gamma > 0.0) || !(mu > 0.0))
        throw std::invalid_argument("params: gamma, mu must be positive");
    if (gamma > mu)
        throw std::invalid_argument("params: need gamma <= mu for cos 2theta");
    model_params p;
    p.nu = nu;
    p.eps = eps;
    p.gamma = gamma;
    p.mu = mu;
    p.kappa = kappa;
    p.theta = 0.5 * std::acos(gamma / mu);
    double s2 = nu + eps * mu * std::sin(2.0 * p.theta);
    if (!(s2 > 0.0))
        throw std::invalid_argument("params: nu + eps mu sin 2theta <= 0");
    p.wave_scale = std::sqrt(s2);
    return p;
}

solitary_wave make_wave(const model_params& prm, const grid& g, double shift,
                        fft_ws& ws) {
    double s = prm.wave_scale;
    if (g.dx > 0.25 / s)
        throw std::invalid_argument("wave underresolved: need dx <= 1/(4 s)");
    solitary_wave w;
    w.prm = prm;
    w.u_star = field(g);
    double amp = std::sqrt(2.0 * s * s / prm.kappa);
    cplx ph = cplx(std::cos(prm.theta), std::sin(prm.theta));
    for (int j = 0; j < g.n; j++)
        w.u_star.v[j] = amp / std::cosh(s * (g.x[j] + shift)) * ph;
    double tail =
        std::max(std::abs(w.u_star.v[0]), std::abs(w.u_star.v[g.n - 1]));
    if (tail > 1e-12)
        throw std::invalid_argument("wave tails exceed 1e-12 at the box edge");
    w.u_star_x = spectral_derivative(w.u_star, 1, ws);
    w.u_star_xx = spectral_derivative(w.u_star, 2, ws);
    return w;
}

field triple_bracket(const field& a, const field& b, const field& c) {
    check_same_grid(a, b);
    check_same_grid(a, c);
    field out(*a.g);
    for (int j = 0; j < a.n(); j++) {
        cplx aa = a.v[j], bb = b.v[j], cc = c.v[j];
        out.v[j] = aa * bb * std::conj(cc) + aa * std::conj(bb) * cc +
                   std::conj(aa) * bb * cc;
    }
    return out;
}

field pfnls_rhs(const field& u, const model_params& prm, fft_ws& ws) {
    field out = spectral_derivative(u, 2, ws);
    const cplx I(0.0, 1.0);
    for (int j = 0; j < u.n(); j++) {
        cplx z = u.v[j];
        out.v[j] = I * out.v[j] - I * prm.nu * z -
                   prm.eps * (prm.gamma * z - prm.mu * std::conj(z)) +
                   I * prm.kappa * std::norm(z) * z;
    }
    return out;
}

}  // namespace spf
