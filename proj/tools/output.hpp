#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "seplab/errors.hpp"
#include "seplab/hamiltonian.hpp"

namespace seplab::cli {

inline constexpr const char* kVersion = SEPLAB_VERSION;

// Self-describing header shared by every artifact of one run.
struct RunHeader {
    std::string command;
    nlohmann::json config;
    std::string model_hash = "none";
    std::uint64_t seed = 0;

    std::string config_hash() const { return hex64(fnv1a(config.dump())); }

    nlohmann::json to_json() const {
        return {{"tool", "seplab"},        {"version", kVersion}, {"command", command},
                {"config", config},        {"config_hash", config_hash()},
                {"model_hash", model_hash}, {"seed", seed}};
    }

    std::string csv_preamble() const {
        std::string s;
        s += "# tool: seplab " + std::string(kVersion) + "\n";
        s += "# command: " + command + "\n";
        s += "# config: " + config.dump() + "\n";
        s += "# config_hash: " + config_hash() + "\n";
        s += "# model_hash: " + model_hash + "\n";
        s += "# seed: " + std::to_string(seed) + "\n";
        return s;
    }
};

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot write " + path);
    f << text;
}

inline void write_json(const std::string& path, const RunHeader& h, nlohmann::json body) {
    body["header"] = h.to_json();
    write_file(path, body.dump(2) + "\n");
}

class CsvWriter {
public:
    CsvWriter(const RunHeader& h, const std::vector<std::string>& columns) {
        text_ = h.csv_preamble();
        for (std::size_t i = 0; i < columns.size(); ++i) text_ += (i ? "," : "") + columns[i];
        text_ += "\n";
    }

    template <class... T>
    void row(const T&... v) {
        bool first = true;
        ((text_ += (first ? "" : ","), text_ += cell(v), first = false), ...);
        text_ += "\n";
    }

    void save(const std::string& path) const { write_file(path, text_); }
    const std::string& text() const { return text_; }

private:
    static std::string cell(double v) { return format_double(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(long v) { return std::to_string(v); }
    static std::string cell(bool v) { return v ? "1" : "0"; }
    static std::string cell(const std::string& v) { return v; }
    static std::string cell(const char* v) { return v; }

    std::string text_;
};

}  // namespace seplab::cli
