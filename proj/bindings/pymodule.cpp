#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nonosgood/bblock.hpp"
#include "nonosgood/fixpoint.hpp"
#include "nonosgood/geometry.hpp"
#include "nonosgood/io.hpp"
#include "nonosgood/moc.hpp"
#include "nonosgood/traj_field.hpp"

namespace py = pybind11;
using namespace nonosgood;

namespace {

Vec to_vec(const std::vector<double>& v) {
    if (v.size() > static_cast<size_t>(kMaxDim)) throw domain_error("dimension too large");
    Vec out(static_cast<int>(v.size()));
    for (size_t i = 0; i < v.size(); ++i) out[i] = v[i];
    return out;
}

std::vector<double> from_vec(const Vec& v) {
    return std::vector<double>(v.c.begin(), v.c.begin() + v.d);
}

geometry::SymbolString to_sigma(const std::string& s, int d) {
    return geometry::SymbolString::parse(s, d);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "divergence-free flows with prescribed non-Osgood moduli of continuity";

    py::register_exception<domain_error>(m, "DomainError");
    py::register_exception<divergence_error>(m, "DivergenceError");
    py::register_exception<construction_error>(m, "ConstructionError");
    py::register_exception<resolution_error>(m, "ResolutionError");

    py::class_<moc::Modulus>(m, "Modulus")
        .def_static("catalog", &moc::Modulus::catalog, py::arg("a"), py::arg("eps"))
        .def_static("tabulated", &moc::Modulus::tabulated, py::arg("knot_log_r"),
                    py::arg("knot_log_w"))
        .def("log_eval", &moc::Modulus::log_eval)
        .def("eval_log", &moc::Modulus::eval_log)
        .def("__call__", &moc::Modulus::operator())
        .def("non_osgood", &moc::Modulus::non_osgood)
        .def("osgood_total", &moc::Modulus::osgood_total)
        .def("osgood_integral", &moc::Modulus::osgood_integral)
        .def("inverse_osgood", &moc::Modulus::inverse_osgood)
        .def("osgood_quadrature", &moc::Modulus::osgood_quadrature, py::arg("log_a"),
             py::arg("log_b"), py::arg("rel_tol") = 1e-10);

    m.def(
        "build_auxiliary",
        [](const moc::Modulus& base, int depth) {
            auto out = moc::build_auxiliary(base, depth);
            py::dict d;
            d["aux"] = out.aux;
            d["log_r"] = out.log_r;
            d["a"] = out.a;
            d["truncated"] = out.truncated;
            d["certificate_sum"] = out.certificate_sum;
            return d;
        },
        py::arg("base"), py::arg("depth"));

    py::class_<moc::ModulusPair>(m, "ModulusPair")
        .def(py::init<moc::Modulus, moc::Modulus>())
        .def("weight", &moc::ModulusPair::weight)
        .def_property_readonly("omega", &moc::ModulusPair::omega)
        .def_property_readonly("omega_tilde", &moc::ModulusPair::omega_tilde);

    m.def("cantor_center", [](const std::string& sigma, int d, double eta, int n_max) {
        auto L = geometry::LengthSequence::uniform(eta, n_max);
        return from_vec(geometry::cantor_center(L, to_sigma(sigma, d)));
    }, py::arg("sigma"), py::arg("d") = 2, py::arg("eta") = 1.0, py::arg("n_max") = 16);
    m.def("dyadic_center", [](const std::string& sigma, int d) {
        return from_vec(geometry::dyadic_center(to_sigma(sigma, d)));
    }, py::arg("sigma"), py::arg("d") = 2);
    m.def("locate_symbols", [](const std::vector<double>& x, int n, double eta) {
        auto L = geometry::LengthSequence::uniform(eta, n + 2);
        return geometry::locate_symbols(L, to_vec(x), n).to_string();
    }, py::arg("x"), py::arg("n"), py::arg("eta") = 1.0);
    m.def("target_map", [](const std::vector<double>& x, int n, double eta) {
        auto L = geometry::LengthSequence::uniform(eta, n + 2);
        return from_vec(geometry::target_map(L, to_vec(x), n));
    }, py::arg("x"), py::arg("n"), py::arg("eta") = 1.0);

    py::class_<bblock::BuildingBlock>(m, "BuildingBlock")
        .def(py::init([](const std::vector<double>& e) {
            return bblock::BuildingBlock(to_vec(e));
        }))
        .def("__call__",
             [](const bblock::BuildingBlock& b, const std::vector<double>& x) {
                 return from_vec(b.eval(to_vec(x)));
             })
        .def("grad", [](const bblock::BuildingBlock& b, const std::vector<double>& x) {
            int d = static_cast<int>(x.size());
            double J[kMaxDim * kMaxDim];
            b.eval_grad(to_vec(x), J);
            std::vector<std::vector<double>> out(d, std::vector<double>(d));
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) out[i][j] = J[i * d + j];
            return out;
        });

    py::class_<traj::TrajField>(m, "TrajField")
        .def(py::init([](const moc::ModulusPair& pair, int d, int n_max) {
                 traj::TrajConfig cfg;
                 cfg.d = d;
                 cfg.n_max = n_max;
                 return traj::TrajField(pair, cfg);
             }),
             py::arg("pair"), py::arg("d") = 2, py::arg("n_max") = 8)
        .def_property_readonly("T", &traj::TrajField::T)
        .def("grid", [](const traj::TrajField& f) { return f.grid().t; })
        .def("radius", &traj::TrajField::radius)
        .def("radius_rate", &traj::TrajField::radius_rate)
        .def("center",
             [](const traj::TrajField& f, const std::string& sigma, double t) {
                 return from_vec(f.center(to_sigma(sigma, f.config().d), t));
             })
        .def("__call__",
             [](const traj::TrajField& f, double t, const std::vector<double>& x) {
                 return from_vec(f.eval(t, to_vec(x)));
             })
        .def("reversed",
             [](const traj::TrajField& f, double t, const std::vector<double>& x) {
                 return from_vec(f.eval_reversed(t, to_vec(x)));
             })
        .def("integrate",
             [](const traj::TrajField& f, const std::vector<double>& x0, double t0, double t1,
                double tol, bool reversed) {
                 std::vector<double> brk(f.grid().t.begin() + 1, f.grid().t.end());
                 if (reversed)
                     for (double& b : brk) b = f.T() - b;
                 auto tr = traj::integrate(reversed ? f.reversed_field() : f.field(), to_vec(x0),
                                           t0, t1, tol, brk);
                 return from_vec(tr.end);
             },
             py::arg("x0"), py::arg("t0"), py::arg("t1"), py::arg("tol") = 1e-10,
             py::arg("reversed") = false);

    py::class_<fixp::ParamTable>(m, "ParamTable")
        .def(py::init<moc::ModulusPair, int, int>(), py::arg("pair"), py::arg("d") = 2,
             py::arg("levels") = 8)
        .def("levels", &fixp::ParamTable::levels)
        .def("saturated", &fixp::ParamTable::saturated)
        .def("N", [](const fixp::ParamTable& t, int k) { return t.level(k).N; })
        .def("eta", [](const fixp::ParamTable& t, int k) { return t.level(k).eta; })
        .def("log_len", &fixp::ParamTable::log_len)
        .def("T", [](const fixp::ParamTable& t, int k) { return t.level(k).T; })
        .def("tau", [](const fixp::ParamTable& t, int k) { return t.level(k).tau; })
        .def("block_start",
             [](const fixp::ParamTable& t, int k) { return t.level(k).block_start; })
        .def("certificates_pass", &fixp::ParamTable::all_certificates_pass)
        .def("to_json", [](const fixp::ParamTable& t) { return t.to_json().dump(2); })
        .def("field",
             [](const fixp::ParamTable& t, int k, double tt, const std::vector<double>& x,
                int depth) { return from_vec(fixp::field_B(t, k, tt, to_vec(x), depth)); },
             py::arg("k"), py::arg("t"), py::arg("x"), py::arg("depth") = 4)
        .def("density",
             [](const fixp::ParamTable& t, int k, double tt, int depth) {
                 auto snap = fixp::density_Theta(t, k, tt, depth);
                 py::list cubes;
                 for (const auto& c : snap.cubes) {
                     py::dict e;
                     e["center"] = from_vec(c.center);
                     e["log_side"] = c.log_side;
                     e["log_mass"] = c.log_mass;
                     cubes.append(e);
                 }
                 py::dict out;
                 out["cubes"] = cubes;
                 out["mass"] = snap.mass();
                 out["approximated"] = snap.approximated;
                 return out;
             },
             py::arg("k"), py::arg("t"), py::arg("depth") = 4)
        .def("mu_velocity",
             [](const fixp::ParamTable& t, double tt, const std::vector<double>& x, int depth) {
                 return from_vec(fixp::final_pair(t, depth).velocity(tt, to_vec(x)));
             },
             py::arg("t"), py::arg("x"), py::arg("depth") = 4)
        .def("mu_density",
             [](const fixp::ParamTable& t, double tt, int depth) {
                 auto snap = fixp::final_pair(t, depth).density(tt);
                 py::dict out;
                 out["mass"] = snap.mass();
                 out["n_cubes"] = snap.cubes.size();
                 out["l1_to_uniform"] = snap.l1_distance_to_uniform(0.0);
                 return out;
             },
             py::arg("t"), py::arg("depth") = 4);

    m.def("default_pair", [] {
        return moc::ModulusPair(moc::Modulus::catalog(2, 1), moc::Modulus::catalog(2, 0.5));
    });
}
