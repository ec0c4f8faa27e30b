#include "spf/grid.hh"

#include <cmath>
#include <mutex>

namespace spf {

grid::grid(int n_, double box_) : n(n_), box(box_) {
    if (n < 8 || (n & (n - 1)) != 0)
        throw std::invalid_argument("grid: n must be a power of two, n >= 8");
    if (!(box > 0.0)) throw std::invalid_argument("grid: box must be positive");
    dx = box / n;
    x.resize(n);
    xi.resize(n);
    for (int j = 0; j < n; j++) {
        x[j] = -0.5 * box + j * dx;
        // fftfreq layout: 0,1,..,n/2-1,-n/2,..,-1 cycles per box
        int k = (j < n / 2) ? j : j - n;
        xi[j] = k / box;
    }
}

void check_same_grid(const field& a, const field& b) {
    if (a.g == nullptr || b.g == nullptr)
        throw std::invalid_argument("field not attached to a grid");
    if (a.g == b.g) return;
    if (a.g->n != b.g->n || a.g->box != b.g->box)
        throw std::invalid_argument("fields live on different grids");
}

bool all_finite(const field& f) {
    for (const cplx& z : f.v)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

// FFTW planning is not thread-safe; execution is.
static std::mutex fftw_plan_mutex;

fft_ws::fft_ws(const grid& g) : n(g.n), scratch(g.n) {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex);
    fftw_complex* s = reinterpret_cast<fftw_complex*>(scratch.data());
    pf = fftw_plan_dft_1d(n, s, s, FFTW_FORWARD,
                          FFTW_ESTIMATE | FFTW_UNALIGNED);
    pb = fftw_plan_dft_1d(n, s, s, FFTW_BACKWARD,
                          FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (pf == nullptr || pb == nullptr)
        throw std::runtime_error("fftw planning failed");
}

fft_ws::~fft_ws() {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex);
    fftw_destroy_plan(pf);
    fftw_destroy_plan(pb);
}

void fft_ws::fwd(cplx* a) {
    fftw_complex* p = reinterpret_cast<fftw_complex*>(a);
    fftw_execute_dft(pf, p, p);
}

void fft_ws::bwd(cplx* a) {
    fftw_complex* p = reinterpret_cast<fftw_complex*>(a);
    fftw_execute_dft(pb, p, p);
    double inv = 1.0 / n;
    for (int j = 0; j < n; j++) a[j] *= inv;
}

field apply_free_group(const field& f, double t, fft_ws& ws) {
    field out = f;
    ws.fwd(out);
    const grid& g = *f.g;
    for (int j = 0; j < g.n; j++) {
        double w = -4.0 * M_PI * M_PI * g.xi[j] * g.xi[j] * t;
        out.v[j] *= cplx(std::cos(w), std::sin(w));
    }
    ws.bwd(out);
    return out;
}

field spectral_derivative(const field& f, int order, fft_ws& ws) {
    if (order < 0) throw std::invalid_argument("derivative order < 0");
    field out = f;
    if (order == 0) return out;
    ws.fwd(out);
    const grid& g = *f.g;
    for (int j = 0; j < g.n; j++) {
        cplx m = cplx(0.0, 2.0 * M_PI * g.xi[j]);
        cplx p = m;
        for (int k = 1; k < order; k++) p *= m;
        out.v[j] *= p;
    }
    ws.bwd(out);
    return out;
}

field translate(const field& f, double a, fft_ws& ws) {
    field out = f;
    ws.fwd(out);
    const grid& g = *f.g;
    for (int j = 0; j < g.n; j++) {
        double w = 2.0 * M_PI * g.xi[j] * a;
        out.v[j] *= cplx(std::cos(w), std::sin(w));
    }
    ws.bwd(out);
    return out;
}

}  // namespace spf
