#include "manifest.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <iterator>
#include <stdexcept>

#include "blindsim/errors.hpp"
#include "json.hpp"

#ifndef BLINDSIM_VERSION
#define BLINDSIM_VERSION "unknown"
#endif

namespace blindsim::tools {

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw UsageError("cannot read '" + path + "' for hashing");
    }
    const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return sha256_hex(bytes);
}

void Manifest::write(const std::string& path) const {
    nlohmann::ordered_json j;
    j["tool"] = "blindsim";
    j["version"] = BLINDSIM_VERSION;
    j["command"] = command;
    j["arguments"] = arguments;
    j["seed"] = seed;
    j["config"] = {{"source", config_source}, {"sha256", config_sha256}};
    auto files = nlohmann::ordered_json::array();
    for (const auto& o : outputs) {
        files.push_back({{"path", o}, {"sha256", sha256_file(o)}});
    }
    j["outputs"] = files;
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw UsageError("cannot write manifest '" + path + "'");
    }
    out << j.dump(2) << "\n";
}

}  // namespace blindsim::tools
