#pragma once

#include <augmt/error.hpp>

#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <string_view>

namespace augmt {

inline void write_json(const std::string &path, const nlohmann::json &j) {
    std::ofstream out(path);
    if (!out)
        throw ValidationError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error &e) {
        throw DataError(path + ": " + e.what());
    }
}

/// Appends JSON objects one per line.
class JsonlWriter {
  public:
    explicit JsonlWriter(const std::string &path) : out_(path) {
        if (!out_)
            throw ValidationError("cannot write '" + path + "'");
    }

    void write(const nlohmann::json &j) { out_ << j.dump() << '\n'; }

  private:
    std::ofstream out_;
};

inline void log_info(std::string_view msg) { std::cerr << "[augmt] " << msg << '\n'; }

} // namespace augmt
