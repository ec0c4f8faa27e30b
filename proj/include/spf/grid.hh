#ifndef SPF_GRID_HH
#define SPF_GRID_HH

#include <complex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace spf {

typedef std::complex<double> cplx;

// Uniform periodic grid on [-box/2, box/2), n a power of two. Frequencies are
// ordinary (cycles per unit length) in FFT storage order, so the free group
// S(t) is the multiplier exp(-4 pi^2 i xi^2 t).
struct grid {
    int n;
    double box;
    double dx;
    std::vector<double> x;
    std::vector<double> xi;
    grid(int n_, double box_);
};

struct field {
    const grid* g;
    std::vector<cplx> v;
    field() : g(nullptr) {}
    explicit field(const grid& g_) : g(&g_), v(g_.n, cplx(0.0, 0.0)) {}
    int n() const { return g->n; }
    double dx() const { return g->dx; }
};

void check_same_grid(const field& a, const field& b);
bool all_finite(const field& f);

// In-place complex transforms of one grid size. Plans are FFTW_ESTIMATE and
// unaligned so planning is deterministic and execute_dft may run on any
// buffer; construction is serialized internally (FFTW planning is not
// thread-safe), execution is. One workspace per thread.
class fft_ws {
  public:
    explicit fft_ws(const grid& g);
    ~fft_ws();
    fft_ws(const fft_ws&) = delete;
    fft_ws& operator=(const fft_ws&) = delete;
    void fwd(cplx* a);  // unnormalized
    void bwd(cplx* a);  // scales by 1/n
    void fwd(field& f) { fwd(f.v.data()); }
    void bwd(field& f) { bwd(f.v.data()); }
    int n;

  private:
    fftw_plan pf, pb;
    std::vector<cplx> scratch;
};

// S(t)f, the free Schroedinger group.
field apply_free_group(const field& f, double t, fft_ws& ws);

field spectral_derivative(const field& f, int order, fft_ws& ws);

// f(x) -> f(x + a), spectral (exact for band-limited data).
field translate(const field& f, double a, fft_ws& ws);

}  // namespace spf

#endif
