#pragma once

#include <stdexcept>
#include <string>

namespace nlslab {

// usage / parameter errors
struct invalid_parameter : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct shape_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct parameter_out_of_range : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// domain errors: the input is fine but lies outside the regime the lab covers
struct domain_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct no_bound_state : domain_error {
    using domain_error::domain_error;
};
struct multiple_bound_states : domain_error {
    using domain_error::domain_error;
};
struct shooting_failure : domain_error {
    using domain_error::domain_error;
};
struct branch_anomaly : domain_error {
    using domain_error::domain_error;
};
struct wrong_branch : domain_error {
    using domain_error::domain_error;
};
struct seed_failure : domain_error {
    using domain_error::domain_error;
};
struct not_in_regime : domain_error {
    using domain_error::domain_error;
};
struct degenerate_frame : domain_error {
    using domain_error::domain_error;
};

} // namespace nlslab
