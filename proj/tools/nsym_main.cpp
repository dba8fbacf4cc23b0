#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nsym/driver.hpp"
#include "nsym/parse.hpp"

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw nsym::UsageError("cannot open model file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << content;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conditional Noether symmetries of perturbed singular Lagrangians"};
    app.require_subcommand(1);

    std::string model_path, out_dir, machine_report, candidate, fixed_lapse_text;
    std::uint64_t seed = nsym::kDefaultProbeSeed;
    int order = -1;
    bool dump_truncated = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("model", model_path, "model definition file")->required();
        sub->add_option("--order", order, "restrict to orders 0..k");
        sub->add_option("--seed", seed, "probe seed for numeric zero-testing");
        sub->add_option("--candidate", candidate, "restrict to one named candidate");
        sub->add_option("--out", out_dir, "directory for report.txt / report.json / artifacts");
        sub->add_option("--machine-report", machine_report, "path for the JSON report");
        return sub;
    };

    CLI::App* verify = add_common(app.add_subcommand("verify", "verify candidate symmetries"));
    verify->add_option("--fixed-lapse", fixed_lapse_text, "freeze N to a constant (rational)");
    CLI::App* derive = add_common(app.add_subcommand("derive", "emit the determining systems"));
    derive->add_flag("--dump-truncated", dump_truncated, "include the discarded tail order");
    add_common(app.add_subcommand("integral", "first integrals and weak certificates"));
    add_common(app.add_subcommand("simulate", "integrate the flow and measure drift"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        nsym::ModelDocument doc = nsym::parse_model(read_file(model_path));
        nsym::cli::RunOptions opts;
        opts.command = app.get_subcommands().front()->get_name();
        opts.seed = seed;
        if (order >= 0) opts.order = order;
        if (!candidate.empty()) opts.candidate = candidate;
        opts.dump_truncated = dump_truncated;
        if (!fixed_lapse_text.empty()) {
            nsym::ParserScope empty;
            empty.allow_opaque = false;
            nsym::Expr v = nsym::parse_expr(fixed_lapse_text, empty);
            if (!v.is(nsym::Kind::Num)) throw nsym::UsageError("--fixed-lapse needs a rational constant");
            opts.fixed_lapse = v.num();
        }

        nsym::cli::RunResult res = nsym::cli::run_command(doc, opts);
        std::cout << res.human_text;

        if (!out_dir.empty()) {
            write_file(fs::path(out_dir) / "report.txt", res.human_text);
            write_file(fs::path(out_dir) / "report.json", res.machine_json);
            for (const auto& [name, content] : res.artifacts)
                write_file(fs::path(out_dir) / name, content);
        }
        if (!machine_report.empty()) write_file(machine_report, res.machine_json);
        return res.exit_code;
    } catch (const nsym::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const nsym::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const nsym::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
