#pragma once

// Run manifest: enough to reproduce an output exactly.

#include <openssl/evp.h>

#include <cstdio>
#include <ctime>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "drexp/error.hpp"
#include "drexp/io.hpp"

namespace drexp::cli {

inline constexpr const char* kToolVersion = "1.0.0";

inline std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct RunManifest {
    std::string command;
    io::json config;
    std::vector<std::pair<std::string, std::string>> inputs;  // path, content

    io::json to_json() const {
        io::json digests = io::json::array();
        for (const auto& [path, content] : inputs)
            digests.push_back({{"path", path}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
        return {{"schema_version", io::kSchemaVersion},
                {"tool", "drexp"},
                {"tool_version", kToolVersion},
                {"command", command},
                {"config", config},
                {"inputs", digests},
                {"timestamp", utc_timestamp()}};
    }
};

} // namespace drexp::cli
