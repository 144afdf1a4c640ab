#include "nllab/nllab.h"

#include <exception>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "nllab/conditions.hpp"
#include "nllab/discrete_operator.hpp"
#include "nllab/error.hpp"
#include "nllab/experiments.hpp"

struct nllab_config {
  nllab::ExperimentConfig cfg;
};

struct nllab_result {
  nllab::RunResult run;
};

struct nllab_measure {
  nllab::MeasureSpec spec;
};

struct nllab_operator {
  std::shared_ptr<const nllab::DiscreteOperator> op;
};

namespace {

thread_local std::string g_last_error;

nllab_status status_of(nllab::ErrorCode code) {
  switch (code) {
    case nllab::ErrorCode::InvalidInput: return NLLAB_ERR_INVALID_INPUT;
    case nllab::ErrorCode::InvalidConfig: return NLLAB_ERR_INVALID_CONFIG;
    case nllab::ErrorCode::NumericalFailure: return NLLAB_ERR_NUMERICAL;
    case nllab::ErrorCode::Io: return NLLAB_ERR_IO;
  }
  return NLLAB_ERR_INTERNAL;
}

// Runs fn and turns every exception into a status code plus a thread-local message.
template <class F>
nllab_status guarded(F&& fn) {
  try {
    g_last_error.clear();
    fn();
    return NLLAB_OK;
  } catch (const nllab::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return NLLAB_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return NLLAB_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return NLLAB_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) nllab::fail(nllab::ErrorCode::InvalidInput, std::string(what) + " must not be NULL");
}

}  // namespace

extern "C" {

const char* nllab_version(void) { return nllab::version_string(); }

const char* nllab_last_error(void) { return g_last_error.c_str(); }

const char* nllab_status_name(nllab_status status) {
  switch (status) {
    case NLLAB_OK: return "ok";
    case NLLAB_ERR_INVALID_INPUT: return "invalid input";
    case NLLAB_ERR_INVALID_CONFIG: return "invalid config";
    case NLLAB_ERR_NUMERICAL: return "numerical failure";
    case NLLAB_ERR_IO: return "i/o error";
    case NLLAB_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

nllab_status nllab_config_load(const char* path, nllab_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    auto c = std::make_unique<nllab_config>();
    c->cfg = nllab::load_config(path);
    *out = c.release();
  });
}

nllab_status nllab_config_parse(const char* yaml_text, const char* base_dir, nllab_config** out) {
  return guarded([&] {
    need(yaml_text, "yaml_text");
    need(out, "out");
    *out = nullptr;
    auto c = std::make_unique<nllab_config>();
    c->cfg = nllab::parse_config(yaml_text, base_dir ? base_dir : ".");
    *out = c.release();
  });
}

void nllab_config_free(nllab_config* config) { delete config; }

nllab_status nllab_config_set_seed(nllab_config* config, uint64_t seed) {
  return guarded([&] {
    need(config, "config");
    config->cfg.experiment.seed = seed;
  });
}

nllab_status nllab_config_experiment(const nllab_config* config, const char** name) {
  return guarded([&] {
    need(config, "config");
    need(name, "name");
    *name = config->cfg.experiment.name.c_str();
  });
}

nllab_status nllab_run(const nllab_config* config, const char* command, const char* out_dir, int threads,
                       nllab_result** out) {
  return guarded([&] {
    need(config, "config");
    need(command, "command");
    need(out, "out");
    *out = nullptr;
    nllab::RunOptions opt;
    if (out_dir) opt.out_dir = out_dir;
    opt.threads = threads;
    auto r = std::make_unique<nllab_result>();
    r->run = nllab::run_command(nllab::command_from_string(command), config->cfg, opt);
    *out = r.release();
  });
}

void nllab_result_free(nllab_result* result) { delete result; }

const char* nllab_result_summary(const nllab_result* result) {
  return result ? result->run.summary_json.c_str() : nullptr;
}

const char* nllab_result_dir(const nllab_result* result) { return result ? result->run.out_dir.c_str() : nullptr; }

size_t nllab_result_file_count(const nllab_result* result) { return result ? result->run.files.size() : 0; }

const char* nllab_result_file(const nllab_result* result, size_t index) {
  if (!result || index >= result->run.files.size()) return nullptr;
  return result->run.files[index].c_str();
}

nllab_status nllab_measure_create(const char* kind, int dim, double alpha, double s, double normalization,
                                  nllab_measure** out) {
  return guarded([&] {
    need(kind, "kind");
    need(out, "out");
    *out = nullptr;
    auto m = std::make_unique<nllab_measure>();
    switch (nllab::measure_kind_from_string(kind)) {
      case nllab::MeasureKind::AlphaStable: m->spec = nllab::MeasureSpec::alpha_stable(dim, alpha, normalization); break;
      case nllab::MeasureKind::Axes: m->spec = nllab::MeasureSpec::axes(dim, alpha, normalization); break;
      case nllab::MeasureKind::Cusp:
        nllab::require(dim == 2, "cusp measure requires d = 2");
        m->spec = nllab::MeasureSpec::cusp(alpha, s, normalization);
        break;
      case nllab::MeasureKind::Tabulated:
        nllab::fail(nllab::ErrorCode::InvalidInput, "tabulated measures are created from a config file");
    }
    *out = m.release();
  });
}

void nllab_measure_free(nllab_measure* measure) { delete measure; }

nllab_status nllab_measure_annulus_mass(const nllab_measure* measure, const double* x, double r, double R,
                                        double* mass) {
  return guarded([&] {
    need(measure, "measure");
    need(x, "x");
    need(mass, "mass");
    const int d = measure->spec.dim;
    const nllab::Point p{x[0], d == 2 ? x[1] : 0.0};
    *mass = nllab::measure_of_set(measure->spec, p, nllab::Annulus{p, r, R}).value;
  });
}

nllab_status nllab_measure_k1_value(const nllab_measure* measure, double rho, double* value) {
  return guarded([&] {
    need(measure, "measure");
    need(value, "value");
    *value = nllab::check_k1(measure->spec, {rho}, 0.0).measured_values.front();
  });
}

nllab_status nllab_operator_create(const nllab_measure* measure, double h, double box, double domain,
                                   nllab_operator** out) {
  return guarded([&] {
    need(measure, "measure");
    need(out, "out");
    *out = nullptr;
    auto o = std::make_unique<nllab_operator>();
    o->op = std::make_shared<const nllab::DiscreteOperator>(measure->spec,
                                                            nllab::make_grid(measure->spec.dim, box, h, domain));
    *out = o.release();
  });
}

void nllab_operator_free(nllab_operator* op) { delete op; }

nllab_status nllab_operator_size(const nllab_operator* op, size_t* nodes, size_t* unknowns) {
  return guarded([&] {
    need(op, "op");
    if (nodes) *nodes = op->op->grid().size();
    if (unknowns) *unknowns = op->op->grid().interior_size();
  });
}

nllab_status nllab_operator_unknown_point(const nllab_operator* op, size_t k, double* x) {
  return guarded([&] {
    need(op, "op");
    need(x, "x");
    const auto& g = op->op->grid();
    nllab::require(k < g.interior_size(), "unknown index out of range");
    const auto& p = g.nodes[static_cast<std::size_t>(g.interior_nodes[k])];
    for (int a = 0; a < g.dim; ++a) x[a] = p[static_cast<std::size_t>(a)];
  });
}

nllab_status nllab_operator_apply(const nllab_operator* op, const double* u, double g, double* lu) {
  return guarded([&] {
    need(op, "op");
    need(u, "u");
    need(lu, "lu");
    const auto& grid = op->op->grid();
    std::vector<double> full(grid.size(), g);
    for (std::size_t k = 0; k < grid.interior_size(); ++k) full[static_cast<std::size_t>(grid.interior_nodes[k])] = u[k];
    const auto res = nllab::apply(*op->op, full, nllab::ExteriorData::constant_value(g), 0.0);
    for (std::size_t k = 0; k < res.size(); ++k) lu[k] = res[k];
  });
}

}  // extern "C"
