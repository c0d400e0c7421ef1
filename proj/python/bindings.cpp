#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lyocert/reporting.hpp"

namespace py = pybind11;
using namespace lyocert;
using comparison::FnClass;
using comparison::KLFunction;
using comparison::Mesh;
using comparison::ScalarFunction;
using lyapunov::LyapunovEvaluator;
using lyapunov::NclfPolicy;
using metrics::CertifyPlan;
using metrics::Weights;
using systems::DisturbanceSignal;
using systems::StateVector;
using systems::SystemDef;

namespace {

py::object to_py(const json& j) {
    auto loads = py::module_::import("json").attr("loads");
    return loads(j.dump());
}

json from_py(const py::object& obj) {
    auto dumps = py::module_::import("json").attr("dumps");
    return json::parse(dumps(obj).cast<std::string>());
}

FnClass fn_class(const std::string& s) { return comparison::fn_class_from_string(s); }

CertifyPlan plan_from(const py::object& plan) {
    if (plan.is_none()) return CertifyPlan{};
    return CertifyPlan::from_json(from_py(plan));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "desk-scale certification of classical and integral stability properties";

    py::enum_<FnClass>(m, "FnClass")
        .value("K", FnClass::K)
        .value("Kinf", FnClass::Kinf)
        .value("L", FnClass::L)
        .value("PositiveDefinite", FnClass::PositiveDefinite)
        .value("NoneClass", FnClass::None);


    py::class_<ScalarFunction>(m, "ScalarFunction")
        .def_static("identity", &ScalarFunction::identity)
        .def_static("power", &ScalarFunction::power, py::arg("a"), py::arg("p"),
                    py::arg("declared") = FnClass::Kinf)
        .def_static("bump", &ScalarFunction::bump)
        .def_static(
            "expression",
            [](const std::string& src, const std::string& cls) {
                return ScalarFunction::from_expression(src, fn_class(cls));
            },
            py::arg("source"), py::arg("declared") = "K")
        .def_static(
            "tabulated",
            [](std::vector<double> xs, std::vector<double> ys, const std::string& cls,
               double slope) {
                return ScalarFunction::tabulated(std::move(xs), std::move(ys), fn_class(cls),
                                                 slope);
            },
            py::arg("abscissae"), py::arg("ordinates"), py::arg("declared") = "K",
            py::arg("extrapolation_slope") = 1.0)
        .def("__call__", &ScalarFunction::operator())
        .def("declared_class",
             [](const ScalarFunction& f) { return to_string(f.declared_class()); })
        .def("to_json", [](const ScalarFunction& f) { return to_py(f.to_json()); })
        .def("__repr__",
             [](const ScalarFunction& f) { return "<ScalarFunction " + f.label() + ">"; });

    m.def(
        "verify_class",
        [](const ScalarFunction& f, std::vector<double> grid, double tol) {
            return to_py(comparison::verify_class(f, grid, tol).to_json());
        },
        py::arg("f"), py::arg("grid"), py::arg("tol") = 1e-9);
    m.def("invert_monotone", &comparison::invert_monotone, py::arg("f"), py::arg("y"),
          py::arg("tol") = 1e-9);
    m.def("pointwise_min", &comparison::pointwise_min);
    m.def("saturate", &comparison::saturate);

    py::class_<Mesh>(m, "Mesh")
        .def_static("dyadic", &Mesh::dyadic)
        .def_static("from_points", &Mesh::from_points, py::arg("points"), py::arg("eps") = 0.0,
                    py::arg("lo") = 0.0, py::arg("hi") = 0.0)
        .def_readonly("points", &Mesh::points);

    m.def(
        "build_partition",
        [](const std::function<double(double)>& z, double eps, double lo, double hi,
           int samples) { return comparison::build_partition(z, eps, lo, hi, samples); },
        py::arg("z"), py::arg("eps"), py::arg("r_low"), py::arg("r_high"),
        py::arg("samples_per_interval") = 17);

    py::class_<KLFunction>(m, "KLFunction")
        .def_static("separable_exp", &KLFunction::separable_exp, py::arg("a"), py::arg("p"),
                    py::arg("c"))
        .def("__call__", &KLFunction::operator())
        .def("to_json", [](const KLFunction& b) { return to_py(b.to_json()); })
        .def_static("from_json",
                    [](const py::object& j) { return KLFunction::from_json(from_py(j)); });

    m.def(
        "kl_majorant",
        [](const std::function<double(double, double)>& psi, const KLFunction& omega,
           const Mesh& rm, const Mesh& tm) { return comparison::kl_majorant(psi, omega, rm, tm); },
        py::arg("psi"), py::arg("omega"), py::arg("r_mesh"), py::arg("t_mesh"));
    m.def("default_majorant_weight", &comparison::default_majorant_weight);
    m.def(
        "verify_kl",
        [](const KLFunction& beta, std::vector<double> rs, std::vector<double> ts, double tol) {
            return to_py(comparison::verify_kl(beta, rs, ts, tol).to_json());
        },
        py::arg("beta"), py::arg("r_grid"), py::arg("t_grid"), py::arg("tol") = 1e-9);
    m.def(
        "sontag_factorize",
        [](const KLFunction& beta, std::vector<double> rs, std::vector<double> ts) {
            auto res = comparison::sontag_factorize(beta, comparison::SontagFamilies{}, rs, ts);
            py::dict out;
            out["status"] = to_string(res.status);
            out["margin"] = res.margin;
            if (res.status == Status::Supported) {
                out["alpha1"] = res.alpha1;
                out["alpha2"] = res.alpha2;
            }
            out["details"] = to_py(res.details);
            return out;
        },
        py::arg("beta"), py::arg("r_grid"), py::arg("t_grid"));

    py::class_<StateVector>(m, "StateVector")
        .def(py::init<std::vector<double>>())
        .def_readonly("coords", &StateVector::coords)
        .def("norm", &StateVector::norm);

    py::class_<DisturbanceSignal>(m, "DisturbanceSignal")
        .def(py::init<>())
        .def_static("constant", &DisturbanceSignal::constant)
        .def_static("piecewise", &DisturbanceSignal::piecewise)
        .def("value_at",
             [](const DisturbanceSignal& d, double t) {
                 auto v = d.value_at(t);
                 return std::vector<double>(v.begin(), v.end());
             })
        .def("to_json", [](const DisturbanceSignal& d) { return to_py(d.to_json()); });
    m.def("shift", &systems::shift);
    m.def("concatenate", &systems::concatenate);

    py::class_<SystemDef>(m, "SystemDef")
        .def_static("catalogue",
                    [](const std::string& name) { return SystemDef::catalogue(name); })
        .def_static("from_config",
                    [](const py::object& cfg) { return SystemDef::from_config(from_py(cfg)); })
        .def("dimension", &SystemDef::dimension)
        .def("name", &SystemDef::name)
        .def(
            "flow",
            [](const SystemDef& sys, double t, std::vector<double> x,
               const DisturbanceSignal& d) {
                return sys.flow(t, StateVector(std::move(x)), d).coords;
            },
            py::arg("t"), py::arg("x"), py::arg("d") = DisturbanceSignal{})
        .def("to_config", [](const SystemDef& sys) { return to_py(sys.to_config()); });

    m.def(
        "check_axioms",
        [](const SystemDef& sys, double tol) {
            py::dict out;
            for (const auto& [name, ev] : systems::check_axioms(sys, systems::AxiomPlan{}, tol))
                out[name.c_str()] = to_py(ev.to_json());
            return out;
        },
        py::arg("system"), py::arg("tol") = 1e-8);

    m.def(
        "integral_transform",
        [](const SystemDef& sys, const ScalarFunction& alpha, std::vector<double> x,
           const DisturbanceSignal& d, double t0, double horizon, double tol) {
            metrics::QuadraturePolicy qp;
            qp.horizon = horizon;
            qp.tol = tol;
            return to_py(
                metrics::integral_transform(sys, alpha, StateVector(std::move(x)), d, t0, qp)
                    .to_json());
        },
        py::arg("system"), py::arg("alpha"), py::arg("x"),
        py::arg("d") = DisturbanceSignal{}, py::arg("t0") = 0.0, py::arg("horizon") = 50.0,
        py::arg("tol") = 1e-8);

    m.def(
        "certify",
        [](const SystemDef& sys, const std::string& property, const py::object& alpha,
           const py::object& psi, const py::object& beta, const py::object& plan) {
            Weights w;
            if (!alpha.is_none()) w.alpha = alpha.cast<ScalarFunction>();
            if (!psi.is_none()) w.psi = psi.cast<ScalarFunction>();
            if (!beta.is_none()) w.beta = beta.cast<KLFunction>();
            return to_py(reporting::certify_report(sys, property, w, plan_from(plan)));
        },
        py::arg("system"), py::arg("property"), py::arg("alpha") = py::none(),
        py::arg("psi") = py::none(), py::arg("beta") = py::none(), py::arg("plan") = py::none());

    py::class_<LyapunovEvaluator>(m, "LyapunovEvaluator")
        .def_static("expression",
                    [](const std::string& src, int dim) {
                        return LyapunovEvaluator::from_expression(src, dim);
                    })
        .def("value",
             [](const LyapunovEvaluator& v, std::vector<double> x) {
                 return v.value(StateVector(std::move(x)));
             })
        .def("to_json", [](const LyapunovEvaluator& v) { return to_py(v.to_json()); });

    m.def(
        "construct_nclf",
        [](const SystemDef& sys, const ScalarFunction& rho, double horizon) {
            NclfPolicy policy;
            policy.horizon = horizon;
            return lyapunov::construct_nclf(sys, rho, policy);
        },
        py::arg("system"), py::arg("rho"), py::arg("horizon") = 50.0);

    m.def(
        "dini_derivative",
        [](const LyapunovEvaluator& V, const SystemDef& sys, std::vector<double> x,
           const DisturbanceSignal& d) {
            return to_py(dini_derivative(V, sys, StateVector(std::move(x)), d).to_json());
        },
        py::arg("V"), py::arg("system"), py::arg("x"), py::arg("d") = DisturbanceSignal{});

    m.def(
        "verify_bellman",
        [](const LyapunovEvaluator& V, const SystemDef& sys, std::vector<double> x,
           std::vector<double> h_grid, double tol) {
            return to_py(lyapunov::verify_bellman(V, sys, StateVector(std::move(x)),
                                                  DisturbanceSignal{}, h_grid, tol)
                             .to_json());
        },
        py::arg("V"), py::arg("system"), py::arg("x"), py::arg("h_grid"),
        py::arg("tol") = 1e-3);

    m.def("rule_table", []() {
        py::list out;
        for (const auto& r : inference::rule_table()) out.append(to_py(r.to_json()));
        return out;
    });
    m.def(
        "infer_closure",
        [](const std::vector<std::string>& assumptions) {
            std::vector<std::pair<inference::PropertyId, std::string>> seeds;
            for (const auto& a : assumptions)
                seeds.push_back({inference::property_from_string(a), "assumed"});
            return to_py(inference::infer_closure(seeds).to_json());
        },
        py::arg("assumptions"));
    m.def("lattice_dot", &inference::to_dot);

    m.def("klfit_from_csv",
          [](const std::string& csv) { return to_py(reporting::klfit_report_from_csv(csv)); });

    m.attr("__version__") = "0.1.0";
}
