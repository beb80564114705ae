#pragma once

// Run manifest: which inputs produced which files, with content hashes.

#include <cstdint>
#include <string>
#include <vector>

namespace blindsim::tools {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

struct Manifest {
    std::string command;
    std::string config_source;
    std::string config_sha256;
    std::uint64_t seed = 0;
    std::vector<std::string> arguments;
    std::vector<std::string> outputs;

    /// Hashes every output and writes JSON to `path`.
    void write(const std::string& path) const;
};

}  // namespace blindsim::tools
