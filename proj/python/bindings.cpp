#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "polygene/forward_sim.hpp"
#include "polygene/hypercube.hpp"
#include "polygene/meanfield.hpp"
#include "polygene/output.hpp"
#include "polygene/recombination.hpp"
#include "polygene/rng.hpp"
#include "polygene/stationary.hpp"
#include "polygene/verify.hpp"

namespace py = pybind11;
using namespace polygene;

namespace {

py::array_t<double> to_array(std::span<const double> v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::vector<double> to_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  return {a.data(), a.data() + a.size()};
}

// Trajectory columns as numpy arrays, frequencies as a (records, L) matrix.
py::dict trajectory_dict(const TrajectoryRecord& r) {
  const auto n = static_cast<py::ssize_t>(r.points.size());
  py::array_t<double> gen(n), t(n), trait(n), var(n), mean_p(n), het(n), sigma2(n), ld(n);
  py::array_t<double> freqs({n, static_cast<py::ssize_t>(r.loci)});
  auto f = freqs.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < n; ++i) {
    const auto& p = r.points[i];
    gen.mutable_at(i) = static_cast<double>(p.generation);
    t.mutable_at(i) = p.time;
    trait.mutable_at(i) = p.stats.trait_mean;
    var.mutable_at(i) = p.stats.trait_variance;
    mean_p.mutable_at(i) = p.stats.mean_frequency;
    het.mutable_at(i) = p.stats.heterozygosity;
    sigma2.mutable_at(i) = p.stats.genetic_variance;
    ld.mutable_at(i) = p.stats.mean_abs_ld;
    for (int l = 0; l < r.loci; ++l) f(i, l) = p.stats.frequencies[l];
  }
  py::dict d;
  d["gen"] = gen;
  d["t"] = t;
  d["trait_mean"] = trait;
  d["trait_var"] = var;
  d["mean_p"] = mean_p;
  d["het"] = het;
  d["sigma2"] = sigma2;
  d["mean_abs_D"] = ld;
  d["freqs"] = freqs;
  d["seed"] = r.seed;
  return d;
}

py::dict series_dict(const MeanFieldSeries& s) {
  const auto n = static_cast<py::ssize_t>(s.samples.size());
  py::array_t<double> t(n), trait(n), mean(n), sbar(n), sigma2(n);
  for (py::ssize_t i = 0; i < n; ++i) {
    const auto& x = s.samples[i];
    t.mutable_at(i) = x.time;
    trait.mutable_at(i) = x.trait_mean;
    mean.mutable_at(i) = x.mean;
    sbar.mutable_at(i) = x.sbar;
    sigma2.mutable_at(i) = x.sigma2;
  }
  py::dict d;
  d["t"] = t;
  d["mean_trait"] = trait;
  d["mean"] = mean;
  d["sbar"] = sbar;
  d["sigma2"] = sigma2;
  return d;
}

MeanFieldSeries series_from(const py::dict& d) {
  const auto t = to_vector(d["t"].cast<py::array_t<double>>());
  const auto trait = to_vector(d["mean_trait"].cast<py::array_t<double>>());
  const auto mean = to_vector(d["mean"].cast<py::array_t<double>>());
  const auto sbar = to_vector(d["sbar"].cast<py::array_t<double>>());
  const auto sigma2 = to_vector(d["sigma2"].cast<py::array_t<double>>());
  MeanFieldSeries s;
  for (std::size_t i = 0; i < t.size(); ++i) s.samples.push_back({t[i], trait[i], mean[i], sbar[i], sigma2[i]});
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Polygenic adaptation: forward simulation, mean-field solvers and stationary analysis.";
  m.attr("__version__") = toolkit_version();
  m.def("derive_seed", &derive_seed, py::arg("root"), py::arg("index"));

  py::class_<FitnessSpec>(m, "FitnessSpec")
      .def_static("linear", &FitnessSpec::linear, py::arg("beta"))
      .def_static("quadratic", &FitnessSpec::quadratic, py::arg("kappa"), py::arg("optimum") = 0.0)
      .def("__call__", &FitnessSpec::operator(), py::arg("z"))
      .def("derivative", &FitnessSpec::derivative, py::arg("z"))
      .def("__repr__", &FitnessSpec::describe);

  py::class_<MutationRates>(m, "MutationRates")
      .def(py::init<double, double>(), py::arg("theta_plus"), py::arg("theta_minus"))
      .def_readwrite("plus", &MutationRates::plus)
      .def_readwrite("minus", &MutationRates::minus);

  py::class_<SymmetricSelection>(m, "SymmetricSelection")
      .def(py::init([](double kappa, double optimum) { return SymmetricSelection{kappa, optimum}; }),
           py::arg("kappa"), py::arg("optimum") = 0.0)
      .def_static("from_fitness", &SymmetricSelection::from_fitness)
      .def_readwrite("kappa", &SymmetricSelection::kappa)
      .def_readwrite("optimum", &SymmetricSelection::optimum);

  // Recombination models.
  py::class_<RecombinationModel>(m, "RecombinationModel")
      .def_static("free", &RecombinationModel::free, py::arg("loci"))
      .def_static("single_crossover",
                  [](int loci) { return RecombinationModel::single_crossover(loci); }, py::arg("loci"))
      .def_static("poisson_crossover",
                  [](int loci, double lambda) { return RecombinationModel::poisson_crossover(loci, lambda); },
                  py::arg("loci"), py::arg("mean_crossovers"))
      .def_property_readonly("loci", &RecombinationModel::loci)
      .def("pairwise_r", &RecombinationModel::pairwise_r)
      .def("beta_subset", [](const RecombinationModel& r, std::vector<int> s) { return r.beta_subset(s); })
      .def("harmonic_stats",
           [](const RecombinationModel& r) {
             const auto h = r.harmonic_stats();
             return py::make_tuple(to_array(h.per_locus), h.genome);
           })
      .def("subset_law", [](const RecombinationModel& r) { return to_array(r.subset_law().masses()); })
      .def("strong_recombination_ratio", &RecombinationModel::strong_recombination_ratio, py::arg("rho"));

  // Exact hypercube operators on probability vectors of length 2^L.
  m.def(
      "le_projection",
      [](py::array_t<double> x, int loci) {
        return to_array(le_projection(HypercubeDistribution(loci, to_vector(x))).weights());
      },
      py::arg("x"), py::arg("loci"));
  m.def(
      "marginal",
      [](py::array_t<double> x, int loci, LocusSet subset) {
        return to_array(marginal_vector(to_vector(x), loci, subset));
      },
      py::arg("x"), py::arg("loci"), py::arg("subset"));
  m.def(
      "recombinator",
      [](py::array_t<double> x, int loci, py::array_t<double> masses) {
        const SubsetLaw nu(loci, to_vector(masses));
        return to_array(recombinator(to_vector(x), loci, nu));
      },
      py::arg("x"), py::arg("loci"), py::arg("mask_law"));
  m.def(
      "selector",
      [](py::array_t<double> x, int loci, const FitnessSpec& spec) {
        return to_array(selector(HypercubeDistribution(loci, to_vector(x)), spec));
      },
      py::arg("x"), py::arg("loci"), py::arg("fitness"));
  m.def(
      "mutator",
      [](py::array_t<double> x, int loci, const MutationRates& theta) {
        return to_array(mutator(to_vector(x), loci, theta));
      },
      py::arg("x"), py::arg("loci"), py::arg("theta"));

  // Forward simulation.
  m.def(
      "simulate",
      [](int population, int loci, std::int64_t generations, const FitnessSpec& fitness,
         const MutationRates& mutation, const RecombinationModel& recombination, double rho,
         std::string init, std::uint64_t seed, std::int64_t stride) {
        SimConfig c;
        c.population = population;
        c.loci = loci;
        c.generations = generations;
        c.fitness = fitness;
        c.mutation = mutation;
        c.recombination = recombination;
        c.rho = rho;
        c.seed = seed;
        c.stride = stride;
        if (init == "all_plus") c.initial = InitialCondition::all_plus();
        else if (init == "all_minus") c.initial = InitialCondition::all_minus();
        else if (init == "neutral") c.initial = InitialCondition::neutral_equilibrium();
        else throw py::value_error("init must be all_plus, all_minus or neutral");
        c.validate();
        TrajectoryRecord r;
        {
          py::gil_scoped_release release;
          r = run_simulation(c);
        }
        return trajectory_dict(r);
      },
      py::arg("N"), py::arg("L"), py::arg("generations"), py::arg("fitness"), py::arg("mutation"),
      py::arg("recombination"), py::arg("rho"), py::arg("init") = "all_plus", py::arg("seed") = 1,
      py::arg("stride") = 1);

  // Stationary analysis.
  py::class_<StationaryDensity>(m, "StationaryDensity")
      .def(py::init<double, MutationRates, int>(), py::arg("y"), py::arg("theta"),
           py::arg("nodes") = StationaryDensity::kDefaultNodes)
      .def("density", &StationaryDensity::density)
      .def("cdf", &StationaryDensity::cdf)
      .def_property_readonly("mean", &StationaryDensity::mean)
      .def_property_readonly("trait_mean", &StationaryDensity::trait_mean)
      .def_property_readonly("variance", &StationaryDensity::variance)
      .def_property_readonly("fourth_cumulant", &StationaryDensity::fourth_cumulant)
      .def_property_readonly("normalization", &StationaryDensity::normalization)
      .def("sample", [](const StationaryDensity& d, std::size_t n, std::uint64_t seed) {
        Philox4x32 rng(seed);
        py::array_t<double> out(static_cast<py::ssize_t>(n));
        for (std::size_t i = 0; i < n; ++i) out.mutable_at(i) = d.sample(rng);
        return out;
      }, py::arg("n"), py::arg("seed") = 1);

  m.def("kappa_c", py::overload_cast<double>(&kappa_c), py::arg("theta"));
  m.def("chi", py::overload_cast<double, const SymmetricSelection&, const MutationRates&>(&chi));
  m.def("chi", py::overload_cast<double, const FitnessSpec&, const MutationRates&>(&chi));
  m.def("chi_derivative",
        py::overload_cast<double, const SymmetricSelection&, const MutationRates&>(&chi_derivative));

  auto roots = [](const std::vector<FixedPoint>& fps) {
    py::list out;
    for (const auto& f : fps) out.append(py::dict(py::arg("y") = f.y, py::arg("branch") = f.branch, py::arg("slope") = f.slope));
    return out;
  };
  m.def(
      "fixed_points",
      [roots](const SymmetricSelection& s, const MutationRates& theta) { return roots(fixed_points(s, theta)); },
      py::arg("selection"), py::arg("theta"));
  m.def(
      "fixed_points",
      [roots](const FitnessSpec& s, const MutationRates& theta) { return roots(fixed_points(s, theta)); },
      py::arg("fitness"), py::arg("theta"));
  m.def(
      "bifurcation_scan",
      [](const MutationRates& theta, double kmin, double kmax, int steps) {
        std::vector<BifurcationPoint> scan;
        {
          py::gil_scoped_release release;
          scan = bifurcation_scan(theta, kmin, kmax, steps);
        }
        py::list out;
        for (const auto& p : scan) {
          std::vector<double> branches;
          for (const auto& r : p.roots) branches.push_back(r.branch);
          out.append(py::make_tuple(p.kappa, branches));
        }
        return out;
      },
      py::arg("theta"), py::arg("kappa_min"), py::arg("kappa_max"), py::arg("steps"));

  // Mean-field solvers.
  auto make_config = [](const FitnessSpec& fitness, const MutationRates& mutation, double dt, double horizon,
                        int particles, int cells, py::object init, std::uint64_t seed, int record_every) {
    MeanFieldConfig c;
    c.fitness = fitness;
    c.mutation = mutation;
    c.dt = dt;
    c.horizon = horizon;
    c.particles = particles;
    c.cells = cells;
    c.seed = seed;
    c.record_every = record_every;
    if (py::isinstance<py::float_>(init) || py::isinstance<py::int_>(init)) {
      c.initial = InitialLaw::at(init.cast<double>());
    } else if (py::isinstance<py::str>(init) && init.cast<std::string>() == "stationary") {
      c.initial = InitialLaw::stationary(0.0);
    } else {
      c.initial = InitialLaw::from_histogram(init.cast<std::vector<double>>());
    }
    c.validate();
    return c;
  };
  m.def(
      "evolve_particles",
      [make_config](const FitnessSpec& f, const MutationRates& mu, double dt, double horizon, int particles,
                    py::object init, std::uint64_t seed, int record_every) {
        const auto c = make_config(f, mu, dt, horizon, particles, 2, init, seed, record_every);
        ParticleRun run;
        {
          py::gil_scoped_release release;
          run = evolve_particles(c);
        }
        auto d = series_dict(run.series);
        d["particles"] = to_array(run.particles);
        return d;
      },
      py::arg("fitness"), py::arg("mutation"), py::arg("dt") = 1e-3, py::arg("horizon") = 1.0,
      py::arg("particles") = 100000, py::arg("init") = 0.5, py::arg("seed") = 1, py::arg("record_every") = 10);
  m.def(
      "evolve_density",
      [make_config](const FitnessSpec& f, const MutationRates& mu, double dt, double horizon, int cells,
                    py::object init, int record_every) {
        const auto c = make_config(f, mu, dt, horizon, 1, cells, init, 1, record_every);
        GridRun run;
        {
          py::gil_scoped_release release;
          run = evolve_density(c);
        }
        auto d = series_dict(run.series);
        d["density"] = to_array(run.density.values());
        return d;
      },
      py::arg("fitness"), py::arg("mutation"), py::arg("dt") = 1e-4, py::arg("horizon") = 1.0,
      py::arg("cells") = 400, py::arg("init") = 0.5, py::arg("record_every") = 100);
  m.def(
      "lande_residual",
      [](const py::dict& series, const FitnessSpec& f, const MutationRates& mu) {
        const auto r = lande_residual(series_from(series), f, mu);
        py::dict d;
        d["t"] = to_array(r.time);
        d["residual"] = to_array(r.residual);
        d["relative_l2"] = r.relative_l2;
        return d;
      },
      py::arg("series"), py::arg("fitness"), py::arg("mutation") = MutationRates{});

  // Property suites.
  m.def(
      "verify",
      [](const std::string& filter, std::uint64_t seed) {
        VerifyReport report;
        {
          py::gil_scoped_release release;
          report = run_verify(filter, seed);
        }
        py::list out;
        for (const auto& e : report.entries) {
          out.append(py::dict(py::arg("suite") = e.suite, py::arg("check") = e.check,
                              py::arg("observed") = e.observed, py::arg("tolerance") = e.tolerance,
                              py::arg("passed") = e.pass));
        }
        return out;
      },
      py::arg("filter") = "", py::arg("seed") = 1);
}
