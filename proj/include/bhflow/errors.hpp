#pragma once

#include <stdexcept>
#include <string>

namespace bhflow {

// Error taxonomy shared by the library and the CLI. Each type maps to a
// distinct process exit code (see exit_code_for).
struct ArgumentError : std::runtime_error {
    explicit ArgumentError(const std::string& msg) : std::runtime_error(msg) {}
};
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};
struct TruncationError : std::runtime_error {
    explicit TruncationError(const std::string& msg) : std::runtime_error(msg) {}
};
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};
struct DivergenceError : std::runtime_error {
    DivergenceError(const std::string& msg, int step) : std::runtime_error(msg), failing_step(step) {}
    int failing_step;
};
struct DegenerateInputError : std::runtime_error {
    explicit DegenerateInputError(const std::string& msg) : std::runtime_error(msg) {}
};

inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ArgumentError*>(&e)) return 2;
    if (dynamic_cast<const FormatError*>(&e)) return 3;
    if (dynamic_cast<const TruncationError*>(&e)) return 4;
    if (dynamic_cast<const DataError*>(&e)) return 5;
    if (dynamic_cast<const IoError*>(&e)) return 6;
    if (dynamic_cast<const DivergenceError*>(&e)) return 7;
    if (dynamic_cast<const DegenerateInputError*>(&e)) return 8;
    return 1;
}

}  // namespace bhflow
