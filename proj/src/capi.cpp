#include "pclab.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "experiments.hpp"
#include "gnn.hpp"
#include "krylov.hpp"
#include "matrix_market.hpp"
#include "precond.hpp"
#include "sparse.hpp"

struct pclab_matrix {
    pclab::SparseCoo a;
};

struct pclab_model {
    pclab::GnnModel m;
};

namespace {

thread_local std::string t_error;

pclab_status fail(pclab_status s, const std::string& what) {
    t_error = what;
    return s;
}

// Runs f and folds the library's exception taxonomy onto status codes.
template <class F>
pclab_status guarded(F&& f) {
    try {
        f();
        return PCLAB_OK;
    } catch (const pclab::DimensionError& e) {
        return fail(PCLAB_ERR_ARGUMENT, e.what());
    } catch (const pclab::FormatError& e) {
        return fail(PCLAB_ERR_FORMAT, e.what());
    } catch (const pclab::NumericError& e) {
        return fail(PCLAB_ERR_NUMERIC, e.what());
    } catch (const pclab::IoError& e) {
        return fail(PCLAB_ERR_IO, e.what());
    } catch (const std::bad_alloc&) {
        return fail(PCLAB_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(PCLAB_ERR_INTERNAL, e.what());
    }
}

// Ownership passes to the caller; released with pclab_string_free.
char* dup_string(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (p == nullptr) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

pclab::Preconditioner build_precond(const char* kind, const pclab::SparseCoo& a,
                                    const pclab_model* model) {
    const std::string k = kind;
    if (k == "none") return pclab::make_none();
    if (k == "jacobi") return pclab::jacobi(a);
    if (k == "ic0") return pclab::ic0(a);
    if (k == "nic" || k == "gnnic") {
        if (model == nullptr)
            throw pclab::DimensionError("kind '" + k + "' needs a model");
        return k == "nic" ? pclab::nic_predict(model->m, a)
                          : pclab::gnn_ic_predict(model->m, a);
    }
    throw pclab::DimensionError("unknown preconditioner kind '" + k + "'");
}

}  // namespace

extern "C" {

const char* pclab_version(void) { return "1.0.0"; }

const char* pclab_status_name(pclab_status status) {
    switch (status) {
        case PCLAB_OK: return "ok";
        case PCLAB_ERR_ARGUMENT: return "argument";
        case PCLAB_ERR_FORMAT: return "format";
        case PCLAB_ERR_NUMERIC: return "numeric";
        case PCLAB_ERR_IO: return "io";
        case PCLAB_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

const char* pclab_last_error(void) { return t_error.c_str(); }

pclab_status pclab_matrix_read(const char* path, pclab_matrix** out) {
    if (path == nullptr || out == nullptr)
        return fail(PCLAB_ERR_ARGUMENT, "pclab_matrix_read: null argument");
    return guarded([&] {
        auto m = std::make_unique<pclab_matrix>();
        m->a = pclab::read_matrix_market_file(path);
        *out = m.release();
    });
}

pclab_status pclab_matrix_write(const pclab_matrix* a, const char* path) {
    if (a == nullptr || path == nullptr)
        return fail(PCLAB_ERR_ARGUMENT, "pclab_matrix_write: null argument");
    return guarded([&] { pclab::write_matrix_market_file(path, a->a); });
}

pclab_status pclab_matrix_from_coo(int64_t n_rows, int64_t n_cols, int64_t nnz,
                                   const int64_t* rows, const int64_t* cols,
                                   const double* values, pclab_matrix** out) {
    if (out == nullptr ||
        (nnz > 0 && (rows == nullptr || cols == nullptr || values == nullptr)))
        return fail(PCLAB_ERR_ARGUMENT, "pclab_matrix_from_coo: null argument");
    if (nnz < 0)
        return fail(PCLAB_ERR_ARGUMENT, "pclab_matrix_from_coo: negative nnz");
    return guarded([&] {
        std::vector<pclab::Index> r(rows, rows + nnz);
        std::vector<pclab::Index> c(cols, cols + nnz);
        std::vector<double> v(values, values + nnz);
        auto m = std::make_unique<pclab_matrix>();
        m->a = pclab::make_coo(n_rows, n_cols, std::move(r), std::move(c),
                               std::move(v));
        *out = m.release();
    });
}

pclab_status pclab_matrix_gen_poisson(int dim, int64_t m, int variable_coeff,
                                      uint64_t coeff_seed, pclab_matrix** out) {
    if (out == nullptr)
        return fail(PCLAB_ERR_ARGUMENT, "pclab_matrix_gen_poisson: null output");
    return guarded([&] {
        auto h = std::make_unique<pclab_matrix>();
        h->a = variable_coeff != 0 ? pclab::gen_poisson(dim, m, coeff_seed)
                                   : pclab::gen_poisson(dim, m);
        *out = h.release();
    });
}

pclab_status pclab_matrix_shape(const pclab_matrix* a, int64_t* n_rows,
                                int64_t* n_cols, int64_t* nnz) {
    if (a == nullptr)
        return fail(PCLAB_ERR_ARGUMENT, "pclab_matrix_shape: null matrix");
    if (n_rows != nullptr) *n_rows = a->a.n_rows;
    if (n_cols != nullptr) *n_cols = a->a.n_cols;
    if (nnz != nullptr) *nnz = a->a.nnz();
    return PCLAB_OK;
}

void pclab_matrix_free(pclab_matrix* a) { delete a; }

pclab_status pclab_model_init(uint64_t seed, pclab_model** out) {
    if (out == nullptr)
        return fail(PCLAB_ERR_ARGUMENT, "pclab_model_init: null output");
    return guarded([&] {
        auto h = std::make_unique<pclab_model>();
        h->m = pclab::GnnModel::init(seed);
        *out = h.release();
    });
}

pclab_status pclab_model_load(const char* path, pclab_model** out) {
    if (path == nullptr || out == nullptr)
        return fail(PCLAB_ERR_ARGUMENT, "pclab_model_load: null argument");
    return guarded([&] {
        std::ifstream in(path);
        if (!in) throw pclab::IoError(std::string("cannot open ") + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::parse_error& e) {
            throw pclab::FormatError(std::string(path) + ": " + e.what());
        }
        auto h = std::make_unique<pclab_model>();
        h->m = pclab::model_from_json(j);
        *out = h.release();
    });
}

pclab_status pclab_model_save(const pclab_model* model, const char* path) {
    if (model == nullptr || path == nullptr)
        return fail(PCLAB_ERR_ARGUMENT, "pclab_model_save: null argument");
    return guarded([&] {
        std::ofstream out(path);
        if (!out) throw pclab::IoError(std::string("cannot open ") + path);
        out << pclab::model_to_json(model->m).dump(2) << '\n';
        if (!out) throw pclab::IoError(std::string("write failed: ") + path);
    });
}

pclab_status pclab_model_param_count(const pclab_model* model, uint64_t* out) {
    if (model == nullptr || out == nullptr)
        return fail(PCLAB_ERR_ARGUMENT, "pclab_model_param_count: null argument");
    *out = model->m.param_count();
    return PCLAB_OK;
}

void pclab_model_free(pclab_model* model) { delete model; }

pclab_status pclab_pcg_solve(const pclab_matrix* a, const double* b,
                             const char* kind, const pclab_model* model,
                             double rel_tol, int64_t max_iters, double* x_out,
                             char** report_json_out) {
    if (a == nullptr || b == nullptr || kind == nullptr || x_out == nullptr)
        return fail(PCLAB_ERR_ARGUMENT, "pclab_pcg_solve: null argument");
    return guarded([&] {
        const auto p = build_precond(kind, a->a, model);
        const auto a_csr = pclab::coo_to_csr(a->a);
        pclab::SolveConfig cfg;
        if (rel_tol > 0.0) cfg.rel_tol = rel_tol;
        cfg.max_iters = max_iters > 0 ? max_iters : -1;
        const std::span<const double> rhs(b, static_cast<std::size_t>(a->a.n_rows));
        auto [x, report] = pclab::pcg(a_csr, rhs, p, cfg);
        std::memcpy(x_out, x.data(), x.size() * sizeof(double));
        if (report_json_out != nullptr)
            *report_json_out = dup_string(pclab::report_to_json(report).dump());
    });
}

pclab_status pclab_run(const char* command, const char* config_json,
                       char** summary_json_out) {
    if (command == nullptr)
        return fail(PCLAB_ERR_ARGUMENT, "pclab_run: null command");
    return guarded([&] {
        nlohmann::json config;
        try {
            config = nlohmann::json::parse(
                config_json != nullptr ? config_json : "{}");
        } catch (const nlohmann::json::parse_error& e) {
            throw pclab::FormatError(std::string("config: ") + e.what());
        }
        if (!config.is_object())
            throw pclab::FormatError("config must be a JSON object");
        const auto summary = pclab::run_command(command, config);
        if (summary_json_out != nullptr)
            *summary_json_out = dup_string(summary.dump());
    });
}

void pclab_string_free(char* s) { std::free(s); }

}  // extern "C"
