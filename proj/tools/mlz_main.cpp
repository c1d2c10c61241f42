#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlz/scenario.hpp"

namespace {

mlz::Json load_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw mlz::ValidationError("cannot open scenario file " + path);
    return mlz::Json::parse(is);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mlz - multistate Landau-Zener scattering laboratory"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir = ".";
    int threads = 0;
    std::vector<std::string> overrides;

    CLI::App* run = app.add_subcommand("run", "execute a scenario file");
    run->add_option("scenario", scenario_path, "scenario JSON file")->required();
    run->add_option("--out-dir", out_dir, "output directory");
    run->add_option("--threads", threads, "sweep worker count (0 = all cores)");
    run->add_option("--override", overrides, "key=value scenario override (dotted path)");

    std::string validate_path;
    CLI::App* validate = app.add_subcommand("validate", "check a scenario file, no computation");
    validate->add_option("scenario", validate_path, "scenario JSON file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            mlz::Json doc = load_json(scenario_path);
            for (const auto& o : overrides) mlz::apply_override(doc, o);
            mlz::RunOutcome out = mlz::run_scenario(doc, out_dir, threads);
            if (out.exit_code != 0) {
                std::cout << out.error.dump(2) << "\n";
                return out.exit_code;
            }
            std::cout << out.manifest.dump(2) << "\n";
            return 0;
        }
        if (validate->parsed()) {
            mlz::Json doc = load_json(validate_path);
            mlz::ValidationReport rep = mlz::validate_scenario(doc);
            mlz::Json report = {{"valid", rep.valid}, {"errors", rep.errors}};
            std::cout << report.dump(2) << "\n";
            return rep.valid ? 0 : 1;
        }
    } catch (const nlohmann::json::exception& e) {
        std::cout << mlz::Json{{"error", {{"type", "JsonError"}, {"message", e.what()}}}}.dump(2)
                  << "\n";
        return 1;
    } catch (const mlz::Error& e) {
        std::cout << mlz::Json{{"error", {{"type", "Error"}, {"message", e.what()}}}}.dump(2)
                  << "\n";
        return 1;
    }
    return 0;
}
