#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace discnn {

// Base for all library errors. Subclasses map onto CLI exit codes:
// ConfigError/ShapeError -> 1, DataError -> 2, DivergenceError -> 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dimension / shape mismatches; messages name the offending axes.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Invalid usage or configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed or unreadable data, IO failures.
class DataError : public Error {
public:
    using Error::Error;
};

// Training aborted on non-finite loss. Carries the last epoch that was
// still finite so the caller can report where things went wrong.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& msg, int last_finite_epoch, double last_finite_loss)
        : Error(msg), last_finite_epoch(last_finite_epoch), last_finite_loss(last_finite_loss) {}

    int last_finite_epoch = -1;
    double last_finite_loss = 0.0;
};

// Sample role within an experiment split.
enum class Role { Positive, Negative, Unseen };

const char* role_name(Role role);
Role role_from_name(const std::string& name);

namespace num {

// Worker count for parallel_for. 0 restores the hardware default.
void set_num_threads(int n);
int num_threads();

// Static split of [0, count) into contiguous chunks, one per worker.
// Each chunk runs fn(begin, end). Chunks must write disjoint outputs and
// keep any reduction order internal, so results are bit-identical to a
// single-threaded run.
void parallel_for(std::int64_t count, const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace num

}  // namespace discnn
