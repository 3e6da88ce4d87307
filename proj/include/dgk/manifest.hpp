#pragma once

// Run manifests. Every CLI run writes exactly one: the subcommand, the
// fully resolved flat config snapshot, the seed, the paths it read and
// wrote, and a content hash over the snapshot. No timestamps or host
// details, so the manifest of a rerun is byte-identical and the hash can
// stand in for "same experiment".

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dgk/common.hpp"

namespace dgk {

inline constexpr int kManifestVersion = 1;

struct RunManifest {
    int schema_version = kManifestVersion;
    std::string subcommand;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> config; // resolved dotted keys
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::string config_hash; // filled on write from the fields above
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// The hash covers what determines the run's outputs: subcommand, seed and
/// the config snapshot, serialized canonically (keys are already sorted by
/// the map). Paths are deliberately excluded so moving artifacts around
/// does not change the experiment's identity.
inline std::string manifest_hash(const RunManifest& m) {
    std::string blob = m.subcommand;
    blob += '\n';
    blob += std::to_string(m.seed);
    blob += '\n';
    for (const auto& [key, value] : m.config) {
        blob += key;
        blob += '=';
        blob += value;
        blob += '\n';
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(blob)));
    return buf;
}

inline void write_run_manifest(const std::string& path, RunManifest m) {
    m.config_hash = manifest_hash(m);
    nlohmann::json j{
        {"schema_version", m.schema_version}, {"subcommand", m.subcommand},
        {"seed", m.seed},                     {"config", m.config},
        {"inputs", m.inputs},                 {"outputs", m.outputs},
        {"config_hash", m.config_hash},
    };
    std::ofstream out{path};
    if (!out) {
        throw IoError{"cannot open run manifest for writing: " + path, 0};
    }
    out << j.dump(2) << '\n';
    if (!out.good()) {
        throw IoError{"failed writing run manifest: " + path, 0};
    }
}

/// Loads a manifest and verifies its hash still matches its content.
inline RunManifest read_run_manifest(const std::string& path) {
    std::ifstream in{path};
    if (!in) {
        throw IoError{"cannot open run manifest: " + path, 0};
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError{"malformed run manifest " + path + ": " + e.what(), 0};
    }
    RunManifest m;
    try {
        m.schema_version = j.at("schema_version").get<int>();
        if (m.schema_version != kManifestVersion) {
            throw IoError{"unsupported manifest schema_version in " + path, 0};
        }
        m.subcommand = j.at("subcommand").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.config = j.at("config").get<std::map<std::string, std::string>>();
        m.inputs = j.at("inputs").get<std::vector<std::string>>();
        m.outputs = j.at("outputs").get<std::vector<std::string>>();
        m.config_hash = j.at("config_hash").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError{"incomplete run manifest " + path + ": " + e.what(), 0};
    }
    if (m.config_hash != manifest_hash(m)) {
        throw IoError{"run manifest hash mismatch in " + path, 0};
    }
    return m;
}

}  // namespace dgk
