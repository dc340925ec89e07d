#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include "json.hpp"

namespace qmedia {

using json = nlohmann::json;

// Every failure raised by the library carries a stable kind tag and a JSON
// witness, so the CLI can print it without knowing the concrete cause.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message, json witness = json::object())
        : std::runtime_error(kind + ": " + message), kind_(std::move(kind)), witness_(std::move(witness)) {}

    const std::string& kind() const noexcept { return kind_; }
    const json& witness() const noexcept { return witness_; }

private:
    std::string kind_;
    json witness_;
};

[[noreturn]] inline void fail(const std::string& kind, const std::string& message, json witness = json::object()) {
    throw Error(kind, message, std::move(witness));
}

} // namespace qmedia
