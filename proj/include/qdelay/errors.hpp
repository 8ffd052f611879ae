#ifndef QDELAY_ERRORS_HPP
#define QDELAY_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qdelay {

enum class ErrorCode {
    invalid_argument,
    validation,
    domain_error,
    no_solution,
    singular,
    insufficient_samples,
    length_mismatch,
    tolerance_not_met,
    invalid_state,
    fit_diverged,
    not_converged,
    underdetermined,
    degenerate,
    bad_grid,
    io_error,
    parse_error,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

} // namespace qdelay

#endif
