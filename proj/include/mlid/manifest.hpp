#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mlid/util.hpp"

#ifndef MLID_VERSION
#define MLID_VERSION "0.0.0"
#endif

namespace mlid {

// Reproducibility record written once per CLI run: the command, its
// effective configuration, digests of every input file, the seeds used and
// the paths produced. No timestamps, so identical runs write identical
// manifests.
struct RunManifest {
    std::string command;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    std::vector<std::pair<std::string, std::string>> inputs;  // path, digest
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> outputs;

    void add_input(const std::filesystem::path& path) {
        inputs.emplace_back(path.string(), file_digest(path));
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["tool"] = "mlid";
        j["version"] = MLID_VERSION;
        j["command"] = command;
        j["config"] = config;
        j["inputs"] = nlohmann::ordered_json::object();
        for (const auto& [path, digest] : inputs) j["inputs"][path] = digest;
        j["seeds"] = seeds;
        j["outputs"] = outputs;
        return j;
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path);
        if (!out) throw input_error("cannot write manifest: " + path.string());
        out << to_json().dump(2) << "\n";
    }
};

}  // namespace mlid
