#include "experiments.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <utility>

#include "error.hpp"
#include "gnn.hpp"
#include "krylov.hpp"
#include "matrix_market.hpp"
#include "precond.hpp"
#include "rng.hpp"
#include "train.hpp"

namespace fs = std::filesystem;

namespace pclab {

namespace {

constexpr std::uint64_t kTagTrainSplit = 11;
constexpr std::uint64_t kTagValSplit = 12;
constexpr std::uint64_t kTagTestSplit = 13;
constexpr std::uint64_t kTagRhs = 14;
constexpr std::uint64_t kTagInit = 15;

// Pulls typed keys out of a raw config, records every consumed value
// (defaults included) into the resolved copy embedded in artifacts, and
// rejects keys nothing consumed so typos fail loudly.
class Cfg {
  public:
    Cfg(const nlohmann::json& raw, std::string cmd)
        : raw_(raw), cmd_(std::move(cmd)) {
        if (!raw_.is_object())
            throw FormatError(cmd_ + ": config must be a json object");
        for (const auto& item : raw_.items()) pending_.insert(item.key());
    }

    template <class T>
    T get(const std::string& key, const T& fallback) {
        pending_.erase(key);
        if (!raw_.contains(key)) {
            resolved_[key] = fallback;
            return fallback;
        }
        return take<T>(key);
    }

    template <class T>
    T require(const std::string& key) {
        pending_.erase(key);
        if (!raw_.contains(key))
            throw FormatError(cmd_ + ": missing config key '" + key + "'");
        return take<T>(key);
    }

    template <class T>
    std::optional<T> maybe(const std::string& key) {
        pending_.erase(key);
        if (!raw_.contains(key)) return std::nullopt;
        return take<T>(key);
    }

    nlohmann::json finish() {
        if (!pending_.empty())
            throw FormatError(cmd_ + ": unknown config key '" + *pending_.begin() +
                              "'");
        resolved_["command"] = cmd_;
        return resolved_;
    }

  private:
    template <class T>
    T take(const std::string& key) {
        try {
            T v = raw_.at(key).get<T>();
            resolved_[key] = v;
            return v;
        } catch (const nlohmann::json::exception&) {
            throw FormatError(cmd_ + ": config key '" + key + "' has the wrong type");
        }
    }

    nlohmann::json raw_;
    std::string cmd_;
    std::set<std::string> pending_;
    nlohmann::json resolved_;
};

std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot open " + p.string() + " for writing");
    f << text;
    f.close();
    if (!f) throw IoError("write failed for " + p.string());
}

void append_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary | std::ios::app);
    if (!f) throw IoError("cannot open " + p.string() + " for appending");
    f << text;
    f.close();
    if (!f) throw IoError("write failed for " + p.string());
}

nlohmann::json read_json_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot open " + p.string());
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(p.string() + ": " + e.what());
    }
}

// CSV with the resolved config on a leading comment line. Numeric cells
// are preformatted by the caller with fmt_g so file content is exact.
std::string csv_text(const nlohmann::json& config,
                     const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
    std::string s = "# config=" + config.dump() + "\n";
    const auto line = [&s](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) s += ',';
            s += cells[i];
        }
        s += '\n';
    };
    line(header);
    for (const auto& r : rows) {
        if (r.size() != header.size())
            throw DimensionError("csv row width disagrees with the header");
        line(r);
    }
    return s;
}

int family_dim(const std::string& family) {
    if (family == "poisson2d") return 2;
    if (family == "poisson3d") return 3;
    throw FormatError("unknown matrix family '" + family + "'");
}

SparseCoo gen_family(const std::string& family, Index m, bool variable,
                     std::uint64_t matrix_seed) {
    const int dim = family_dim(family);
    return variable ? gen_poisson(dim, m, matrix_seed) : gen_poisson(dim, m);
}

struct DatasetFile {
    std::string split;
    Index index = 0;
    fs::path path;
    Index n = 0;
    Index nnz = 0;
    std::uint64_t matrix_seed = 0;
    std::string id;
};

// Accepts the dataset directory or the manifest file itself.
std::vector<DatasetFile> load_manifest(fs::path dir) {
    if (dir.filename() == "manifest.json") dir = dir.parent_path();
    const auto j = read_json_file(dir / "manifest.json");
    if (j.value("format", "") != "pclab-dataset" || j.value("version", 0) != 1)
        throw FormatError(dir.string() + ": not a dataset manifest");
    std::vector<DatasetFile> out;
    try {
        for (const auto& f : j.at("files")) {
            DatasetFile d;
            d.split = f.at("split").get<std::string>();
            d.index = f.at("index").get<Index>();
            d.id = f.at("path").get<std::string>();
            d.path = dir / d.id;
            d.n = f.at("n").get<Index>();
            d.nnz = f.at("nnz").get<Index>();
            d.matrix_seed = f.at("matrix_seed").get<std::uint64_t>();
            out.push_back(std::move(d));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(dir.string() + ": malformed manifest: " + e.what());
    }
    return out;
}

GnnModel load_model(const std::string& path) {
    return model_from_json(read_json_file(path));
}

struct MethodModels {
    std::optional<GnnModel> nic, gnnic;
};

Preconditioner make_method(const std::string& name, const SparseCoo& a,
                           const MethodModels& mm) {
    if (name == "none") return make_none();
    if (name == "jacobi") return jacobi(a);
    if (name == "ic0") return ic0(a);
    if (name == "nic") {
        if (!mm.nic) throw FormatError("method nic requires nic_checkpoint");
        return nic_predict(*mm.nic, a);
    }
    if (name == "gnnic") {
        if (!mm.gnnic) throw FormatError("method gnnic requires gnnic_checkpoint");
        return gnn_ic_predict(*mm.gnnic, a);
    }
    throw FormatError("unknown method '" + name + "'");
}

void check_methods(const std::vector<std::string>& methods, const MethodModels& mm) {
    for (const auto& m : methods) {
        if (m == "nic" && !mm.nic)
            throw FormatError("method nic requires nic_checkpoint");
        if (m == "gnnic" && !mm.gnnic)
            throw FormatError("method gnnic requires gnnic_checkpoint");
        if (m != "none" && m != "jacobi" && m != "ic0" && m != "nic" && m != "gnnic")
            throw FormatError("unknown method '" + m + "'");
    }
}

struct MethodRun {
    Index iters = 0;
    bool converged = false;
    double p_time = 0, cg_time = 0, total = 0, tri_per_iter = 0;
};

// One warm-start pass is run and discarded before the timed repeats so
// the recorded times see warm caches. Iteration counts are identical
// across repeats; times are averaged.
MethodRun run_method(const std::string& name, const SparseCoo& a,
                     const SparseCsr& a_csr, const std::vector<double>& b,
                     const MethodModels& mm, const SolveConfig& sc, Index repeats,
                     double dropout_eps = -1.0) {
    const auto once = [&] {
        auto p = make_method(name, a, mm);
        if (dropout_eps >= 0.0) p = fill_in_dropout(p, dropout_eps);
        auto [x, rep] = pcg(a_csr, b, p, sc);
        return rep;
    };
    once();
    MethodRun r;
    for (Index k = 0; k < repeats; ++k) {
        const auto rep = once();
        r.iters = rep.iterations;
        r.converged = rep.converged;
        r.p_time += rep.p_time;
        r.cg_time += rep.cg_time;
        r.total += rep.total_time;
        r.tri_per_iter += rep.tri_solve_time_per_iter;
    }
    const double d = static_cast<double>(repeats);
    r.p_time /= d;
    r.cg_time /= d;
    r.total /= d;
    r.tri_per_iter /= d;
    return r;
}

// Single-matrix commands accept either an explicit file or generator
// keys seeded like the test split of a dataset.
SparseCoo single_matrix(Cfg& cfg, std::uint64_t seed, std::uint64_t& matrix_seed_out) {
    const auto path = cfg.maybe<std::string>("matrix");
    const auto family = cfg.get<std::string>("family", "poisson2d");
    const auto m = cfg.get<Index>("m", 64);
    const bool variable = cfg.get<bool>("variable_coeff", true);
    const auto index = cfg.get<Index>("index", 0);
    matrix_seed_out = dataset_matrix_seed(seed, "test", index);
    if (path) return read_matrix_market_file(*path);
    if (m < 2) throw FormatError("m must be at least 2");
    return gen_family(family, m, variable, matrix_seed_out);
}

}  // namespace

std::uint64_t dataset_matrix_seed(std::uint64_t seed, const std::string& split,
                                  Index index) {
    std::uint64_t tag = 0;
    if (split == "train") tag = kTagTrainSplit;
    else if (split == "val") tag = kTagValSplit;
    else if (split == "test") tag = kTagTestSplit;
    else throw FormatError("unknown split '" + split + "'");
    return derive_seed(seed, tag, static_cast<std::uint64_t>(index));
}

std::vector<double> experiment_rhs(std::uint64_t matrix_seed, Index n) {
    const std::uint64_t s = derive_seed(matrix_seed, kTagRhs);
    std::vector<double> b(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = 2.0 * uniform_at(s, i) - 1.0;
    return b;
}

nlohmann::json cmd_gen(const nlohmann::json& config) {
    Cfg cfg(config, "gen");
    const auto seed = cfg.get<std::uint64_t>("seed", 0);
    const auto out = cfg.require<std::string>("out");
    const auto family = cfg.get<std::string>("family", "poisson2d");
    family_dim(family);
    const auto m = cfg.get<Index>("m", 32);
    if (m < 2) throw FormatError("gen: m must be at least 2");
    const bool variable = cfg.get<bool>("variable_coeff", true);
    const auto n_train = cfg.get<Index>("n_train", 10);
    const auto n_val = cfg.get<Index>("n_val", 5);
    const auto n_test = cfg.get<Index>("n_test", 5);
    if (n_train < 0 || n_val < 0 || n_test < 0)
        throw FormatError("gen: sample counts cannot be negative");
    const auto resolved = cfg.finish();

    ensure_dir(out);
    nlohmann::json files = nlohmann::json::array();
    const struct {
        const char* split;
        Index count;
    } splits[] = {{"train", n_train}, {"val", n_val}, {"test", n_test}};
    for (const auto& sp : splits) {
        for (Index i = 0; i < sp.count; ++i) {
            const auto ms = dataset_matrix_seed(seed, sp.split, i);
            const auto a = gen_family(family, m, variable, ms);
            char name[64];
            std::snprintf(name, sizeof name, "%s_%03lld.mtx", sp.split,
                          static_cast<long long>(i));
            nlohmann::json meta{{"split", sp.split},     {"index", i},
                                {"matrix_seed", ms},     {"family", family},
                                {"m", m},                {"variable_coeff", variable}};
            write_matrix_market_file((fs::path(out) / name).string(), a,
                                     "pclab " + meta.dump());
            meta["path"] = name;
            meta["n"] = a.n_rows;
            meta["nnz"] = a.nnz();
            files.push_back(std::move(meta));
        }
    }
    nlohmann::json manifest{{"format", "pclab-dataset"},
                            {"version", 1},
                            {"config", resolved},
                            {"files", files}};
    const auto manifest_path = fs::path(out) / "manifest.json";
    write_text(manifest_path, manifest.dump(2) + "\n");
    return {{"command", "gen"},
            {"config", resolved},
            {"manifest", manifest_path.string()},
            {"files", files.size()}};
}

nlohmann::json cmd_train(const nlohmann::json& config) {
    Cfg cfg(config, "train");
    const auto seed = cfg.get<std::uint64_t>("seed", 0);
    const auto out = cfg.require<std::string>("out");
    const auto data = cfg.require<std::string>("data");
    const auto mode_name = cfg.get<std::string>("mode", "gnnic");
    TrainConfig tc;
    if (mode_name == "nic") tc.mode = PrecondKind::NIC;
    else if (mode_name == "gnnic") tc.mode = PrecondKind::GnnIC;
    else throw FormatError("train: mode must be nic or gnnic");
    tc.seed = seed;
    tc.epochs = cfg.get<Index>("epochs", 50);
    tc.lr = cfg.get<double>("lr", 0.005);
    tc.batch_size = cfg.get<Index>("batch_size", 8);
    tc.warmup_steps = cfg.get<Index>("warmup_steps", -1);
    tc.val_rel_tol = cfg.get<double>("val_rel_tol", 1e-6);
    tc.val_max_iters = cfg.get<Index>("val_max_iters", 2000);
    const auto resume = cfg.maybe<std::string>("resume");
    const auto stop_after = cfg.get<Index>("stop_after_epoch", -1);
    const auto init_seed =
        cfg.get<std::uint64_t>("init_seed", derive_seed(seed, kTagInit));
    const auto resolved = cfg.finish();

    std::vector<TrainSample> tr, val;
    for (const auto& f : load_manifest(data)) {
        if (f.split == "train")
            tr.push_back({f.id, read_matrix_market_file(f.path.string())});
        else if (f.split == "val")
            val.push_back({f.id, read_matrix_market_file(f.path.string())});
    }

    TrainState state = resume ? train_state_from_json(read_json_file(*resume))
                              : TrainState::fresh(GnnModel::init(init_seed));
    const bool fresh = state.epochs_done == 0;
    const auto log = train_epochs(state, tc, tr, val, stop_after);

    ensure_dir(out);
    std::string log_text;
    if (fresh)
        log_text =
            nlohmann::json{{"type", "config"}, {"config", resolved}}.dump() + "\n";
    for (const auto& line : log) log_text += line.dump() + "\n";
    const auto log_path = fs::path(out) / "log.jsonl";
    if (fresh || !fs::exists(log_path)) write_text(log_path, log_text);
    else append_text(log_path, log_text);

    auto state_json = train_state_to_json(state);
    state_json["config"] = resolved;
    const auto state_path = fs::path(out) / "state.json";
    write_text(state_path, state_json.dump(2) + "\n");

    auto ckpt = model_to_json(state.best);
    ckpt["config"] = resolved;
    ckpt["best_epoch"] = state.best_epoch;
    if (!state.val_history.empty())
        ckpt["best_val_iters"] = state.val_history[best_epoch_index(state.val_history)];
    const auto ckpt_path = fs::path(out) / "checkpoint.json";
    write_text(ckpt_path, ckpt.dump(2) + "\n");

    return {{"command", "train"},       {"config", resolved},
            {"checkpoint", ckpt_path.string()}, {"log", log_path.string()},
            {"state", state_path.string()},     {"epochs_done", state.epochs_done},
            {"steps_done", state.steps_done},   {"best_epoch", state.best_epoch}};
}

nlohmann::json cmd_eval(const nlohmann::json& config) {
    Cfg cfg(config, "eval");
    cfg.get<std::uint64_t>("seed", 0);  // provenance only: systems come from the dataset
    const auto out = cfg.require<std::string>("out");
    const auto data = cfg.require<std::string>("data");
    auto methods = cfg.get<std::vector<std::string>>("methods", {});
    MethodModels mm;
    if (const auto p = cfg.maybe<std::string>("nic_checkpoint")) mm.nic = load_model(*p);
    if (const auto p = cfg.maybe<std::string>("gnnic_checkpoint"))
        mm.gnnic = load_model(*p);
    if (methods.empty()) {
        methods = {"none", "jacobi", "ic0"};
        if (mm.nic) methods.push_back("nic");
        if (mm.gnnic) methods.push_back("gnnic");
    }
    SolveConfig sc;
    sc.rel_tol = cfg.get<double>("rel_tol", 1e-6);
    sc.max_iters = cfg.get<Index>("max_iters", -1);
    const auto repeats = cfg.get<Index>("repeats", 1);
    if (repeats < 1) throw FormatError("eval: repeats must be at least 1");
    const auto split = cfg.get<std::string>("split", "test");
    const auto resolved = cfg.finish();
    check_methods(methods, mm);

    std::vector<DatasetFile> files;
    for (auto& f : load_manifest(data))
        if (f.split == split) files.push_back(std::move(f));
    if (files.empty())
        throw FormatError("eval: dataset has no '" + split + "' files");

    std::vector<std::vector<std::string>> rows;
    nlohmann::json jrows = nlohmann::json::array();
    std::map<std::string, std::array<double, 5>> agg;
    for (const auto& f : files) {
        const auto a = read_matrix_market_file(f.path.string());
        const auto a_csr = coo_to_csr(a);
        const auto b = experiment_rhs(f.matrix_seed, a.n_rows);
        for (const auto& mth : methods) {
            const auto r = run_method(mth, a, a_csr, b, mm, sc, repeats);
            rows.push_back({f.id, std::to_string(a.n_rows),
                            std::to_string(a.nnz()), mth, std::to_string(r.iters),
                            r.converged ? "1" : "0", fmt_g(r.p_time),
                            fmt_g(r.cg_time), fmt_g(r.total), fmt_g(r.tri_per_iter)});
            jrows.push_back({{"matrix", f.id},
                             {"n", a.n_rows},
                             {"nnz", a.nnz()},
                             {"method", mth},
                             {"iters", r.iters},
                             {"converged", r.converged},
                             {"p_time", r.p_time},
                             {"cg_time", r.cg_time},
                             {"total_time", r.total},
                             {"tri_per_iter", r.tri_per_iter}});
            auto& s = agg[mth];
            s[0] += static_cast<double>(r.iters);
            s[1] += r.p_time;
            s[2] += r.cg_time;
            s[3] += r.total;
            s[4] += 1.0;
        }
    }

    std::vector<std::vector<std::string>> mean_rows;
    nlohmann::json jmeans = nlohmann::json::array();
    for (const auto& mth : methods) {
        const auto& s = agg.at(mth);
        const double c = s[4];
        mean_rows.push_back({mth, fmt_g(s[0] / c), fmt_g(s[1] / c), fmt_g(s[2] / c),
                             fmt_g(s[3] / c)});
        jmeans.push_back({{"method", mth},
                          {"mean_iters", s[0] / c},
                          {"mean_p_time", s[1] / c},
                          {"mean_cg_time", s[2] / c},
                          {"mean_total_time", s[3] / c}});
    }

    ensure_dir(out);
    write_text(fs::path(out) / "eval.csv",
               csv_text(resolved,
                        {"matrix", "n", "nnz", "method", "iters", "converged",
                         "p_time", "cg_time", "total_time", "tri_per_iter"},
                        rows));
    write_text(fs::path(out) / "eval_means.csv",
               csv_text(resolved,
                        {"method", "mean_iters", "mean_p_time", "mean_cg_time",
                         "mean_total_time"},
                        mean_rows));
    nlohmann::json j{{"command", "eval"},
                     {"config", resolved},
                     {"rows", jrows},
                     {"means", jmeans}};
    write_text(fs::path(out) / "eval.json", j.dump(2) + "\n");
    return {{"command", "eval"},
            {"config", resolved},
            {"rows", jrows.size()},
            {"means", jmeans},
            {"csv", (fs::path(out) / "eval.csv").string()},
            {"json", (fs::path(out) / "eval.json").string()}};
}

nlohmann::json cmd_crossscale(const nlohmann::json& config) {
    Cfg cfg(config, "crossscale");
    const auto seed = cfg.get<std::uint64_t>("seed", 0);
    const auto out = cfg.require<std::string>("out");
    const auto family = cfg.get<std::string>("family", "poisson2d");
    family_dim(family);
    const bool variable = cfg.get<bool>("variable_coeff", true);
    const auto sizes = cfg.require<std::vector<Index>>("sizes");
    if (sizes.empty()) throw FormatError("crossscale: sizes must not be empty");
    const auto samples = cfg.get<Index>("samples_per_size", 1);
    if (samples < 1)
        throw FormatError("crossscale: samples_per_size must be at least 1");
    MethodModels mm;
    if (const auto p = cfg.maybe<std::string>("nic_checkpoint")) mm.nic = load_model(*p);
    if (const auto p = cfg.maybe<std::string>("gnnic_checkpoint"))
        mm.gnnic = load_model(*p);
    if (!mm.nic && !mm.gnnic)
        throw FormatError("crossscale: at least one checkpoint is required");
    SolveConfig sc;
    sc.rel_tol = cfg.get<double>("rel_tol", 1e-6);
    sc.max_iters = cfg.get<Index>("max_iters", -1);
    const auto resolved = cfg.finish();

    std::vector<std::string> methods{"ic0"};
    if (mm.nic) methods.push_back("nic");
    if (mm.gnnic) methods.push_back("gnnic");

    std::vector<std::vector<std::string>> rows;
    nlohmann::json jrows = nlohmann::json::array();
    for (const auto m : sizes) {
        if (m < 2) throw FormatError("crossscale: m must be at least 2");
        std::map<std::string, double> mean_iters;
        std::map<std::string, bool> all_conv;
        Index n = 0;
        for (const auto& mth : methods) {
            mean_iters[mth] = 0.0;
            all_conv[mth] = true;
        }
        for (Index i = 0; i < samples; ++i) {
            const auto ms = dataset_matrix_seed(seed, "test", i);
            const auto a = gen_family(family, m, variable, ms);
            n = a.n_rows;
            const auto a_csr = coo_to_csr(a);
            const auto b = experiment_rhs(ms, n);
            for (const auto& mth : methods) {
                const auto p = make_method(mth, a, mm);
                const auto [x, rep] = pcg(a_csr, b, p, sc);
                mean_iters[mth] += static_cast<double>(rep.iterations);
                all_conv[mth] = all_conv[mth] && rep.converged;
            }
        }
        for (auto& [mth, v] : mean_iters) v /= static_cast<double>(samples);
        for (const auto& mth : methods) {
            const double ratio = mean_iters[mth] / mean_iters["ic0"];
            rows.push_back({std::to_string(m), std::to_string(n), mth,
                            fmt_g(mean_iters[mth]), fmt_g(ratio),
                            all_conv[mth] ? "1" : "0"});
            jrows.push_back({{"m", m},
                             {"n", n},
                             {"method", mth},
                             {"mean_iters", mean_iters[mth]},
                             {"ratio_vs_ic0", ratio},
                             {"all_converged", all_conv[mth]}});
        }
    }

    ensure_dir(out);
    write_text(fs::path(out) / "crossscale.csv",
               csv_text(resolved,
                        {"m", "n", "method", "mean_iters", "ratio_vs_ic0",
                         "all_converged"},
                        rows));
    nlohmann::json j{{"command", "crossscale"}, {"config", resolved}, {"rows", jrows}};
    write_text(fs::path(out) / "crossscale.json", j.dump(2) + "\n");
    return {{"command", "crossscale"},
            {"config", resolved},
            {"rows", jrows},
            {"csv", (fs::path(out) / "crossscale.csv").string()},
            {"json", (fs::path(out) / "crossscale.json").string()}};
}

nlohmann::json cmd_dropout(const nlohmann::json& config) {
    Cfg cfg(config, "dropout");
    const auto seed = cfg.get<std::uint64_t>("seed", 0);
    const auto out = cfg.require<std::string>("out");
    const auto method = cfg.get<std::string>("method", "ic0");
    if (method != "ic0" && method != "nic" && method != "gnnic")
        throw FormatError("dropout: method must produce a factor");
    MethodModels mm;
    if (const auto p = cfg.maybe<std::string>("nic_checkpoint")) mm.nic = load_model(*p);
    if (const auto p = cfg.maybe<std::string>("gnnic_checkpoint"))
        mm.gnnic = load_model(*p);
    const auto eps_list =
        cfg.get<std::vector<double>>("eps", {0.0, 0.01, 0.02, 0.05, 0.1, 0.2});
    if (eps_list.empty()) throw FormatError("dropout: eps list must not be empty");
    SolveConfig sc;
    sc.rel_tol = cfg.get<double>("rel_tol", 1e-6);
    sc.max_iters = cfg.get<Index>("max_iters", -1);
    const auto repeats = cfg.get<Index>("repeats", 1);
    if (repeats < 1) throw FormatError("dropout: repeats must be at least 1");
    std::uint64_t matrix_seed = 0;
    const auto a = single_matrix(cfg, seed, matrix_seed);
    const auto resolved = cfg.finish();
    check_methods({method}, mm);

    const auto a_csr = coo_to_csr(a);
    const auto b = experiment_rhs(matrix_seed, a.n_rows);

    std::vector<std::vector<std::string>> rows;
    nlohmann::json jrows = nlohmann::json::array();
    for (const double eps : eps_list) {
        if (eps < 0.0) throw FormatError("dropout: eps must be >= 0");
        const auto nnz =
            fill_in_dropout(make_method(method, a, mm), eps).factor.matrix.nnz();
        const auto r = run_method(method, a, a_csr, b, mm, sc, repeats, eps);
        rows.push_back({fmt_g(eps), std::to_string(nnz), std::to_string(r.iters),
                        r.converged ? "1" : "0", fmt_g(r.p_time), fmt_g(r.cg_time),
                        fmt_g(r.total), fmt_g(r.tri_per_iter)});
        jrows.push_back({{"eps", eps},
                         {"nnz", nnz},
                         {"iters", r.iters},
                         {"converged", r.converged},
                         {"p_time", r.p_time},
                         {"cg_time", r.cg_time},
                         {"total_time", r.total},
                         {"tri_per_iter", r.tri_per_iter}});
    }

    ensure_dir(out);
    write_text(fs::path(out) / "dropout.csv",
               csv_text(resolved,
                        {"eps", "nnz", "iters", "converged", "p_time", "cg_time",
                         "total_time", "tri_per_iter"},
                        rows));
    nlohmann::json j{{"command", "dropout"}, {"config", resolved}, {"rows", jrows}};
    write_text(fs::path(out) / "dropout.json", j.dump(2) + "\n");
    return {{"command", "dropout"},
            {"config", resolved},
            {"rows", jrows},
            {"csv", (fs::path(out) / "dropout.csv").string()},
            {"json", (fs::path(out) / "dropout.json").string()}};
}

nlohmann::json cmd_analyze(const nlohmann::json& config) {
    Cfg cfg(config, "analyze");
    const auto seed = cfg.get<std::uint64_t>("seed", 0);
    const auto out = cfg.require<std::string>("out");
    MethodModels mm;
    if (const auto p = cfg.maybe<std::string>("nic_checkpoint")) mm.nic = load_model(*p);
    if (const auto p = cfg.maybe<std::string>("gnnic_checkpoint"))
        mm.gnnic = load_model(*p);
    if (!mm.nic && !mm.gnnic)
        throw FormatError("analyze: at least one checkpoint is required");
    std::uint64_t matrix_seed = 0;
    const auto a = single_matrix(cfg, seed, matrix_seed);
    const auto resolved = cfg.finish();

    const auto ref = ic0(a);
    std::vector<std::string> methods;
    if (mm.nic) methods.push_back("nic");
    if (mm.gnnic) methods.push_back("gnnic");

    ensure_dir(out);
    nlohmann::json summary = nlohmann::json::object();
    nlohmann::json csvs = nlohmann::json::object();
    for (const auto& mth : methods) {
        const auto pred = make_method(mth, a, mm);
        const auto [diag, off] = factor_relative_error(pred.factor, ref.factor);
        const auto& pm = ref.factor.matrix;
        std::vector<std::vector<std::string>> rows;
        std::size_t kd = 0, ko = 0;
        for (std::size_t k = 0; k < pm.values.size(); ++k) {
            const bool is_diag = pm.rows[k] == pm.cols[k];
            const double err = is_diag ? diag.values[kd++] : off.values[ko++];
            rows.push_back({std::to_string(pm.rows[k]), std::to_string(pm.cols[k]),
                            is_diag ? "diag" : "off", fmt_g(err)});
        }
        const auto csv_path = fs::path(out) / ("errors_" + mth + ".csv");
        write_text(csv_path,
                   csv_text(resolved, {"row", "col", "kind", "rel_err"}, rows));
        summary[mth] = {{"diag_mean", diag.mean}, {"diag_max", diag.max},
                        {"off_mean", off.mean},   {"off_max", off.max},
                        {"entries", pm.nnz()}};
        csvs[mth] = csv_path.string();
    }

    nlohmann::json j{{"command", "analyze"},
                     {"config", resolved},
                     {"matrix_seed", matrix_seed},
                     {"summary", summary}};
    write_text(fs::path(out) / "analyze.json", j.dump(2) + "\n");
    return {{"command", "analyze"},
            {"config", resolved},
            {"summary", summary},
            {"csv", csvs},
            {"json", (fs::path(out) / "analyze.json").string()}};
}

nlohmann::json run_command(const std::string& name, const nlohmann::json& config) {
    if (name == "gen") return cmd_gen(config);
    if (name == "train") return cmd_train(config);
    if (name == "eval") return cmd_eval(config);
    if (name == "crossscale") return cmd_crossscale(config);
    if (name == "dropout") return cmd_dropout(config);
    if (name == "analyze") return cmd_analyze(config);
    throw FormatError("unknown command '" + name + "'");
}

}  // namespace pclab
