// Command line front end. All real work happens behind the C API; this
// file only assembles the config (file first, flags override) and
// relays the run summary.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pclab.h"

namespace {

struct CommandSpec {
    const char* name;
    const char* help;
    bool has_mode;
};

constexpr CommandSpec kCommands[] = {
    {"gen", "generate a matrix dataset with a manifest", false},
    {"train", "train a preconditioner model on a dataset", true},
    {"eval", "benchmark preconditioners on a dataset split", false},
    {"crossscale", "apply a checkpoint to larger problem sizes", false},
    {"dropout", "sweep fill-in dropout thresholds on one matrix", false},
    {"analyze", "compare predicted factors against the reference", false},
};

int run(const std::string& command, const nlohmann::json& config) {
    char* summary = nullptr;
    const pclab_status rc = pclab_run(command.c_str(), config.dump().c_str(), &summary);
    if (rc != PCLAB_OK) {
        std::fprintf(stderr, "pclab: %s error: %s\n", pclab_status_name(rc),
                     pclab_last_error());
        return static_cast<int>(rc);
    }
    nlohmann::json parsed = nlohmann::json::parse(summary);
    pclab_string_free(summary);
    std::printf("%s\n", parsed.dump(2).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse preconditioner laboratory"};
    app.set_version_flag("--version", pclab_version());
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out;
    std::string mode;
    std::int64_t threads = 1;

    std::map<std::string, CLI::App*> subs;
    for (const auto& spec : kCommands) {
        CLI::App* sub = app.add_subcommand(spec.name, spec.help);
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--seed", seed, "base seed for all derived randomness");
        sub->add_option("--out", out, "output directory");
        if (spec.has_mode)
            sub->add_option("--mode", mode, "preconditioner to learn")
                ->check(CLI::IsMember({"nic", "gnnic"}));
        sub->add_option("--threads", threads, "worker threads; timing needs 1")
            ->check(CLI::PositiveNumber);
        subs[spec.name] = sub;
    }

    CLI11_PARSE(app, argc, argv);
    CLI::App* sub = app.get_subcommands().front();

    nlohmann::json config = nlohmann::json::object();
    if (sub->count("--config") > 0) {
        std::ifstream in(config_path);
        if (!in) {
            std::fprintf(stderr, "pclab: cannot open config file %s\n",
                         config_path.c_str());
            return static_cast<int>(PCLAB_ERR_IO);
        }
        try {
            in >> config;
        } catch (const nlohmann::json::parse_error& e) {
            std::fprintf(stderr, "pclab: %s: %s\n", config_path.c_str(), e.what());
            return static_cast<int>(PCLAB_ERR_FORMAT);
        }
        if (!config.is_object()) {
            std::fprintf(stderr, "pclab: %s: config must be a JSON object\n",
                         config_path.c_str());
            return static_cast<int>(PCLAB_ERR_FORMAT);
        }
    }
    if (sub->count("--seed") > 0) config["seed"] = seed;
    if (sub->count("--out") > 0) config["out"] = out;
    const CLI::Option* mode_opt = sub->get_option_no_throw("--mode");
    if (mode_opt != nullptr && mode_opt->count() > 0) config["mode"] = mode;
    if (threads != 1)
        std::fprintf(stderr,
                     "pclab: note: execution is single threaded; --threads %lld "
                     "changes nothing\n",
                     static_cast<long long>(threads));

    return run(sub->get_name(), config);
}
