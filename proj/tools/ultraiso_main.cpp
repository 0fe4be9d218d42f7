// ultraiso — command-line front end over the ultraiso shared library.
//
// Subcommands mirror the C API: space show, geometry decompose, iso
// apply/verify/factor/compose/random, classify, tingley extend/obstruct,
// oracle census/enumerate. Structured output is JSON (--format json) or a
// short human-readable rendering (default).
//
// Exit codes: 0 success / verified pass, 1 verified negative result
// (failed verification, obstruction) with the witness on stdout,
// 2 malformed input or usage error.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ultraiso.h"

namespace {

using nlohmann::json;

struct Cleanup {
    char* s = nullptr;
    ~Cleanup() { ultraiso_string_free(s); }
};

[[noreturn]] void die(const std::string& message) {
    std::cerr << "ultraiso: " << message << "\n";
    std::exit(2);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) die("cannot read '" + path + "'");
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// --point and similar accept inline JSON or @file.
std::string inline_or_file(const std::string& arg) {
    if (!arg.empty() && arg[0] == '@') return read_file(arg.substr(1));
    return arg;
}

struct SpaceHandle {
    ultraiso_space* ptr = nullptr;
    ~SpaceHandle() { ultraiso_space_free(ptr); }
};

struct IsoHandle {
    ultraiso_iso* ptr = nullptr;
    ~IsoHandle() { ultraiso_iso_free(ptr); }
};

void check(ultraiso_status status) {
    if (status == ULTRAISO_OK || status == ULTRAISO_NEGATIVE) return;
    die(ultraiso_last_error());
}

void load_space(const std::string& path, SpaceHandle& out) {
    check(ultraiso_space_parse(read_file(path).c_str(), &out.ptr));
}

void load_iso(const SpaceHandle& space, const std::string& path, IsoHandle& out) {
    check(ultraiso_iso_parse(space.ptr, read_file(path).c_str(), &out.ptr));
}

std::string points_line(const json& arr) {
    std::string s;
    for (const auto& p : arr) {
        if (!s.empty()) s += "  ";
        s += p.dump();
    }
    return s;
}

// One renderer per response schema; everything else falls back to the JSON.
void render_human(const std::string& command, const json& j) {
    if (command == "space") {
        std::cout << "field: " << j["field"].dump() << "\n"
                  << "dim: " << j["dim"] << ", weights: " << j["weights"].dump() << "\n"
                  << "attainable values: " << j["values"].dump() << "\n"
                  << "trivial norm: " << (j["trivial_norm"].get<bool>() ? "yes" : "no")
                  << "\n";
        return;
    }
    if (command == "decompose") {
        if (j["empty"].get<bool>()) {
            std::cout << "sphere of radius " << j["radius"].get<std::string>()
                      << " is empty\n";
            return;
        }
        std::cout << "sphere radius " << j["radius"].get<std::string>() << ": "
                  << j["count"] << " ball classes\n"
                  << points_line(j["classes"]) << "\n";
        return;
    }
    if (command == "apply") {
        std::cout << j["point"].dump() << "\n";
        return;
    }
    if (command == "verify") {
        if (j["result"] == "pass") {
            std::cout << "pass\n";
        } else {
            std::cout << "FAIL: " << j["reason"].get<std::string>() << "\n";
            if (j.contains("witness"))
                std::cout << "witness: x = " << j["witness"]["x"].dump()
                          << ", y = " << j["witness"]["y"].dump() << "\n";
        }
        return;
    }
    if (command == "classify") {
        std::cout << "verdict: " << j["verdict"].get<std::string>() << "\n"
                  << "case: " << j["case"].get<std::string>() << "\n";
        if (j.contains("certificate"))
            std::cout << "certificate: " << j["certificate"].dump() << "\n";
        if (j.contains("witness")) std::cout << "witness: " << j["witness"].dump() << "\n";
        return;
    }
    if (command == "census") {
        std::cout << "candidates: " << j["candidates"].get<std::string>()
                  << (j["sampled"].get<bool>() ? " (sampled)" : "") << "\n";
        if (!j["sampled"].get<bool>())
            std::cout << "total: " << j["total"] << ", linear: " << j["linear"]
                      << ", affine: " << j["affine"] << "\n";
        std::cout << "nonlinear witness: "
                  << (j["nonlinear_witness"].is_null() ? "none" : "found") << "\n";
        return;
    }
    if (command == "extend") {
        if (j["result"] == "obstructed") {
            std::cout << "obstructed: " << j["reason"].get<std::string>() << "\n"
                      << j["detail"].get<std::string>() << "\n";
        } else {
            std::cout << "extended (m = " << j["m"] << ", window "
                      << j["window"]["lo"].get<std::string>() << " .. "
                      << j["window"]["hi"].get<std::string>() << ")\n"
                      << "verified: " << (j["verified"].get<bool>() ? "yes" : "NO") << "\n"
                      << "restricts to tau exactly: "
                      << (j["restricts_exactly"].get<bool>() ? "yes" : "NO") << "\n";
        }
        return;
    }
    if (command == "obstruct") {
        if (j["result"] == "no_obstruction") {
            std::cout << "no obstruction\n";
        } else {
            std::cout << "obstructed: " << j["reason"].get<std::string>() << "\n"
                      << j["detail"].get<std::string>() << "\n";
        }
        return;
    }
    std::cout << j.dump(2) << "\n";
}

int finish(const std::string& command, ultraiso_status status, const char* payload,
           const std::string& format) {
    if (status != ULTRAISO_OK && status != ULTRAISO_NEGATIVE) die(ultraiso_last_error());
    if (payload) {
        if (format == "json") {
            std::cout << payload << "\n";
        } else {
            render_human(command, json::parse(payload));
        }
    }
    return status == ULTRAISO_OK ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"isometries of finite-dimensional ultrametric normed spaces"};
    app.require_subcommand(1);

    std::string space_path, space2_path, iso_path, spec_path, map_path;
    std::string radius, rprime = "", point_arg, format = "human";
    std::vector<std::string> iso_paths;
    int depth = 3;
    int m = 2;
    std::uint64_t seed = 1;
    std::uint64_t cap = 1'000'000;

    const auto add_format = [&](CLI::App* cmd) {
        cmd->add_option("--format", format, "output format: human or json")
            ->check(CLI::IsMember({"human", "json"}));
    };

    // space show
    auto* space_cmd = app.add_subcommand("space", "space utilities");
    auto* space_show = space_cmd->add_subcommand("show", "normalized descriptor and values");
    space_show->add_option("--space", space_path, "space JSON file")->required();
    add_format(space_show);

    // geometry decompose
    auto* geometry = app.add_subcommand("geometry", "spheres and ball classes");
    auto* decompose =
        geometry->add_subcommand("decompose", "ball-class representatives of a sphere");
    decompose->add_option("--space", space_path)->required();
    decompose->add_option("--radius", radius, "sphere radius, e.g. 1 or 1/3")->required();
    decompose->add_option("--depth", depth);
    add_format(decompose);

    // iso ...
    auto* iso = app.add_subcommand("iso", "isometry trees");
    auto* iso_apply = iso->add_subcommand("apply", "apply a tree to a point");
    iso_apply->add_option("--space", space_path)->required();
    iso_apply->add_option("--iso", iso_path)->required();
    iso_apply->add_option("--point", point_arg, "point JSON (inline or @file)")->required();
    add_format(iso_apply);

    auto* iso_verify = iso->add_subcommand("verify", "verify a tree is an isometry");
    iso_verify->add_option("--space", space_path)->required();
    iso_verify->add_option("--iso", iso_path)->required();
    iso_verify->add_option("--depth", depth);
    add_format(iso_verify);

    auto* iso_factor = iso->add_subcommand("factor", "factor a centred map into a tree");
    iso_factor->add_option("--space", space_path)->required();
    iso_factor->add_option("--map", map_path, "point-pair map JSON file")->required();
    iso_factor->add_option("--depth", depth);
    add_format(iso_factor);

    auto* iso_compose =
        iso->add_subcommand("compose", "compose two trees (first listed applied first)");
    iso_compose->add_option("--space", space_path)->required();
    iso_compose->add_option("--iso", iso_paths, "tree JSON files (exactly two)")
        ->required()
        ->expected(2);
    iso_compose->add_option("--depth", depth);
    add_format(iso_compose);

    auto* iso_random = iso->add_subcommand("random", "seeded random isometry tree");
    iso_random->add_option("--space", space_path)->required();
    iso_random->add_option("--depth", depth);
    iso_random->add_option("--seed", seed);
    add_format(iso_random);

    // classify
    auto* classify_cmd =
        app.add_subcommand("classify", "are all centred isometries linear?");
    classify_cmd->add_option("--space", space_path)->required();
    classify_cmd->add_option("--depth", depth);
    add_format(classify_cmd);

    // tingley
    auto* tingley = app.add_subcommand("tingley", "sphere-to-space extension");
    auto* extend = tingley->add_subcommand("extend", "extend a sphere isometry");
    extend->add_option("--spec", spec_path, "sphere isometry spec JSON file")->required();
    extend->add_option("--m", m, "outward window exponent");
    extend->add_option("--depth", depth);
    add_format(extend);

    auto* obstruct = tingley->add_subcommand("obstruct", "trivial-valuation obstructions");
    obstruct->add_option("--space", space_path)->required();
    obstruct->add_option("--space2", space2_path)->required();
    obstruct->add_option("--radius", radius)->required();
    obstruct->add_option("--rprime", rprime)->required();
    add_format(obstruct);

    // oracle
    auto* oracle = app.add_subcommand("oracle", "brute-force ground truth");
    auto* census_cmd = oracle->add_subcommand("census", "count centred isometries");
    census_cmd->add_option("--space", space_path)->required();
    census_cmd->add_option("--cap", cap, "candidate cap");
    add_format(census_cmd);
    auto* enumerate_cmd = oracle->add_subcommand("enumerate", "list centred isometries");
    enumerate_cmd->add_option("--space", space_path)->required();
    enumerate_cmd->add_option("--cap", cap, "candidate cap");
    add_format(enumerate_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    Cleanup out;

    if (space_show->parsed()) {
        SpaceHandle space;
        load_space(space_path, space);
        return finish("space", ultraiso_space_describe(space.ptr, &out.s), out.s, format);
    }
    if (decompose->parsed()) {
        SpaceHandle space;
        load_space(space_path, space);
        return finish("decompose",
                      ultraiso_decompose(space.ptr, radius.c_str(), depth, &out.s), out.s,
                      format);
    }
    if (iso_apply->parsed()) {
        SpaceHandle space;
        IsoHandle tree;
        load_space(space_path, space);
        load_iso(space, iso_path, tree);
        return finish("apply",
                      ultraiso_iso_apply(tree.ptr, inline_or_file(point_arg).c_str(),
                                         &out.s),
                      out.s, format);
    }
    if (iso_verify->parsed()) {
        SpaceHandle space;
        IsoHandle tree;
        load_space(space_path, space);
        load_iso(space, iso_path, tree);
        return finish("verify", ultraiso_iso_verify(tree.ptr, depth, &out.s), out.s,
                      format);
    }
    if (iso_factor->parsed()) {
        SpaceHandle space;
        load_space(space_path, space);
        IsoHandle tree;
        check(ultraiso_iso_factor_pairs(space.ptr, read_file(map_path).c_str(), depth,
                                        &tree.ptr));
        return finish("tree", ultraiso_iso_to_json(tree.ptr, &out.s), out.s, format);
    }
    if (iso_compose->parsed()) {
        SpaceHandle space;
        load_space(space_path, space);
        IsoHandle first, second, composed;
        load_iso(space, iso_paths[0], first);
        load_iso(space, iso_paths[1], second);
        check(ultraiso_iso_compose(first.ptr, second.ptr, depth, &composed.ptr));
        return finish("tree", ultraiso_iso_to_json(composed.ptr, &out.s), out.s, format);
    }
    if (iso_random->parsed()) {
        SpaceHandle space;
        load_space(space_path, space);
        IsoHandle tree;
        check(ultraiso_iso_random(space.ptr, depth, seed, &tree.ptr));
        return finish("tree", ultraiso_iso_to_json(tree.ptr, &out.s), out.s, format);
    }
    if (classify_cmd->parsed()) {
        SpaceHandle space;
        load_space(space_path, space);
        return finish("classify", ultraiso_classify(space.ptr, depth, &out.s), out.s,
                      format);
    }
    if (extend->parsed()) {
        return finish("extend",
                      ultraiso_tingley_extend(read_file(spec_path).c_str(), m, depth,
                                              &out.s),
                      out.s, format);
    }
    if (obstruct->parsed()) {
        return finish("obstruct",
                      ultraiso_tingley_obstruction(read_file(space_path).c_str(),
                                                   read_file(space2_path).c_str(),
                                                   radius.c_str(), rprime.c_str(), &out.s),
                      out.s, format);
    }
    if (census_cmd->parsed()) {
        SpaceHandle space;
        load_space(space_path, space);
        return finish("census", ultraiso_census(space.ptr, cap, &out.s), out.s, format);
    }
    if (enumerate_cmd->parsed()) {
        SpaceHandle space;
        load_space(space_path, space);
        return finish("enumerate", ultraiso_enumerate(space.ptr, cap, &out.s), out.s,
                      format);
    }
    die("no subcommand");
}
