#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "spf/expansion.hh"
#include "spf/experiments.hh"
#include "spf/io.hh"

namespace py = pybind11;
using namespace spf;

namespace {

py::array_t<std::complex<double>> to_array(const field& f) {
    py::array_t<std::complex<double>> a(f.v.size());
    std::copy(f.v.begin(), f.v.end(), a.mutable_data());
    return a;
}

py::array_t<double> to_array(const std::vector<double>& v) {
    py::array_t<double> a(v.size());
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

field from_array(const grid& g, py::array_t<std::complex<double>> a) {
    auto buf = a.request();
    if (buf.ndim != 1 || buf.shape[0] != g.n)
        throw std::invalid_argument("expected a length-n complex vector");
    field f(g);
    const auto* p = static_cast<const std::complex<double>*>(buf.ptr);
    std::copy(p, p + g.n, f.v.begin());
    return f;
}

// Owns the grid the fields point into; everything else hangs off it.
struct pack_handle {
    grid g;
    fft_ws ws;
    solitary_wave wave;
    lin_pack pack;
    pack_handle(double nu, double eps, double gamma, double mu, double kappa,
                int n, double box, const std::string& cache_dir)
        : g(n, box), ws(g),
          wave(make_wave(make_params(nu, eps, gamma, mu, kappa), g, 0.0, ws)),
          pack(cached_linearization(wave, ws, cache_dir)) {}
};

run_config overlay(const std::string& config_text, const py::dict& sets) {
    run_config c =
        config_text.empty() ? run_config{} : parse_config(config_text);
    for (auto item : sets) {
        std::string key = py::cast<std::string>(item.first);
        std::string val = py::cast<std::string>(py::str(item.second));
        size_t dot = key.find('.');
        if (dot == std::string::npos)
            throw std::invalid_argument("override keys look like section.key");
        apply_config_entry(c, key.substr(0, dot), key.substr(dot + 1), val);
    }
    return c;
}

}  // namespace

PYBIND11_MODULE(pyspf, m) {
    m.doc() = "spectral SPFNLS core";
    m.attr("version") = "1.0.0";

    m.def("defaults", []() { return render_config(run_config{}); },
          "canonical default config as INI text");

    m.def(
        "solitary_wave",
        [](double nu, double eps, double gamma, double mu, double kappa,
           int n, double box) {
            grid g(n, box);
            fft_ws ws(g);
            model_params prm = make_params(nu, eps, gamma, mu, kappa);
            solitary_wave w = make_wave(prm, g, 0.0, ws);
            py::dict d;
            std::vector<double> xs(g.x.begin(), g.x.end());
            d["x"] = to_array(xs);
            d["u"] = to_array(w.u_star);
            d["u_x"] = to_array(w.u_star_x);
            d["theta"] = prm.theta;
            d["scale"] = prm.wave_scale;
            return d;
        },
        py::arg("nu") = 1.0, py::arg("eps") = 0.15, py::arg("gamma") = 1.0,
        py::arg("mu") = 1.05, py::arg("kappa") = 8.0, py::arg("n") = 256,
        py::arg("box") = 60.0);

    m.def(
        "simulate",
        [](const std::string& config, const py::dict& sets) {
            run_config c = overlay(config, sets);
            grid g(c.n, c.box);
            fft_ws ws(g);
            model_params prm = params_from(c);
            noise_model nm =
                make_noise(g, kernel_from(c.kernel), c.length_scale,
                           c.normalize_beta, c.sigma, ws, c.kernel_file);
            field u0 = c.u0 == "zero" ? field(g)
                                      : make_wave(prm, g, 0.0, ws).u_star;
            stepper_config cfg{c.dt, scheme_from(c.scheme), c.t_end,
                               c.record_stride};
            rng_stream rs(derive_seed(c.base_seed, 0, 0));
            trajectory tr = simulate(u0, prm, nm, cfg, rs, ws, false);
            py::dict d;
            d["t"] = to_array(tr.times);
            d["l2"] = to_array(tr.l2);
            d["h1"] = to_array(tr.h1);
            d["h2"] = to_array(tr.h2);
            d["blowup"] = tr.blowup;
            return d;
        },
        py::arg("config") = std::string(), py::arg("sets") = py::dict());

    py::class_<pack_handle>(m, "Pack")
        .def(py::init<double, double, double, double, double, int, double,
                      const std::string&>(),
             py::arg("nu") = 1.0, py::arg("eps") = 0.15,
             py::arg("gamma") = 1.0, py::arg("mu") = 1.05,
             py::arg("kappa") = 8.0, py::arg("n") = 256,
             py::arg("box") = 60.0, py::arg("cache_dir") = std::string())
        .def_property_readonly("gap_b",
                               [](const pack_handle& h) { return h.pack.gap_b; })
        .def_property_readonly(
            "zero_abs", [](const pack_handle& h) { return h.pack.zero_abs; })
        .def_property_readonly("fit_M",
                               [](const pack_handle& h) { return h.pack.fit_M; })
        .def_property_readonly("fit_a",
                               [](const pack_handle& h) { return h.pack.fit_a; })
        .def_property_readonly(
            "spectrum",
            [](const pack_handle& h) {
                py::array_t<std::complex<double>> a(h.pack.spectrum.size());
                std::copy(h.pack.spectrum.begin(), h.pack.spectrum.end(),
                          a.mutable_data());
                return a;
            })
        .def_property_readonly(
            "u_star", [](const pack_handle& h) { return to_array(h.wave.u_star); })
        .def_property_readonly(
            "u_star_x",
            [](const pack_handle& h) { return to_array(h.wave.u_star_x); })
        .def("phase",
             [](pack_handle& h, py::array_t<std::complex<double>> f) {
                 return phase_functional(from_array(h.g, f), h.pack);
             })
        .def("pi",
             [](pack_handle& h, py::array_t<std::complex<double>> f) {
                 return to_array(project_pi(from_array(h.g, f), h.pack));
             })
        .def(
            "semigroup",
            [](pack_handle& h, py::array_t<std::complex<double>> f, double t,
               double dt) {
                return to_array(apply_semigroup(from_array(h.g, f), t, h.pack,
                                                semi_mode::timestep, h.ws,
                                                dt));
            },
            py::arg("f"), py::arg("t"), py::arg("dt") = 1e-2);
}
