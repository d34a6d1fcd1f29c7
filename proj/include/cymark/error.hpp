#pragma once

#include <stdexcept>
#include <string>

namespace cymark {

// Base for everything thrown by the library.
struct error : std::runtime_error {
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or unreadable files, filesystem failures.
struct io_error : error {
    explicit io_error(const std::string& msg) : error(msg) {}
};

// Input files that parse but violate the expected schema
// (bad column count, out-of-range values, inconsistent dimensions).
struct schema_error : error {
    explicit schema_error(const std::string& msg) : error(msg) {}
};

// Violated preconditions on in-memory arguments.
struct domain_error : error {
    explicit domain_error(const std::string& msg) : error(msg) {}
};

}  // namespace cymark
