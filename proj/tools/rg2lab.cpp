// rg2lab: scenario-driven runner for the RG-2 flow laboratory.
//
//   rg2lab {flow|entropy|eigen|verify} --config s.toml [--out dir] [--check-level fast|full]
//   rg2lab batch --config batch.toml [--out dir] [--check-level fast|full]
//
// Exit status: 0 all verifications pass, 2 some verification failed, 1 runtime error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include <rg2/scenario.hpp>

namespace {

struct Options {
    std::string config;
    std::string out = "out";
    std::string level = "full";
};

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--config", o.config, "scenario (or batch) TOML file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--check-level", o.level, "fast skips eigenvalue-based checks")
        ->check(CLI::IsMember({"fast", "full"}))
        ->capture_default_str();
}

int run(const std::string& command, const Options& o) {
    const auto level = o.level == "fast" ? rg2::CheckLevel::fast : rg2::CheckLevel::full;
    if (command == "batch") {
        const auto b = rg2::load_batch(o.config);
        const auto r = rg2::run_batch(b, level, o.out);
        for (const auto& l : r.lines) std::cout << l << "\n";
        return r.exit_code;
    }
    const auto c = rg2::load_scenario(o.config);
    const auto res = rg2::run_scenario(c, rg2::parse_command(command), level, o.out);
    for (const auto& k : res.checks)
        std::cout << (k.informational ? "info " : (k.pass ? "pass " : "FAIL ")) << k.name << " " << rg2::num(k.value)
                  << (k.detail.empty() ? "" : "  (" + k.detail + ")") << "\n";
    if (res.halted) std::cout << "halted: " << res.halt_reason << "\n";
    std::cout << c.name << (res.pass() ? ": pass" : ": FAIL") << "\n";
    return res.pass() ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"RG-2 flow numerical laboratory"};
    app.require_subcommand(1);
    Options opts;
    std::string chosen;
    const std::pair<const char*, const char*> commands[] = {
        {"flow", "integrate the flow and write the trajectory"},
        {"entropy", "flow plus entropy records and monotonicity report"},
        {"eigen", "eigenvalue suite on the initial geometry"},
        {"verify", "every verification enabled in the config"},
        {"batch", "run the scenarios listed in a batch file in parallel"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        add_common(sub, opts);
        sub->callback([&chosen, n = std::string(name)] { chosen = n; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    try {
        return run(chosen, opts);
    } catch (const rg2::Error& e) {
        std::cerr << "rg2lab: " << e.kind() << ": " << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "rg2lab: " << e.what() << "\n";
    }
    return 1;
}
