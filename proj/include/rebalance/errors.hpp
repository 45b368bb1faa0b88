#pragma once

#include <stdexcept>
#include <string>

namespace rebalance {

/// Malformed input document: bad syntax, wrong field type, missing field.
class parse_error : public std::runtime_error {
public:
    explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

/// Structurally well-formed input violating a dataset invariant
/// (duplicate ids, dangling references, out-of-range class indices).
class validation_error : public std::runtime_error {
public:
    explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

/// Operation evaluated outside its mathematical domain
/// (zero frequency, empty input, threshold out of range).
class domain_error : public std::runtime_error {
public:
    explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

/// exp() argument beyond double range; carries the offending class when known.
class overflow_error : public std::runtime_error {
public:
    explicit overflow_error(const std::string& what) : std::runtime_error(what) {}
};

/// Analysis request that cannot produce a meaningful answer: probe points
/// inside a clamp region, too few classes to fit, infeasible generator
/// parameters. Distinct from domain_error so callers can tell "bad value"
/// from "bad question".
class diagnostic_error : public std::runtime_error {
public:
    explicit diagnostic_error(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem failure: unreadable file, missing directory.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace rebalance
