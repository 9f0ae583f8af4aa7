#pragma once

#include <stdexcept>
#include <string>

namespace rgat {

// Base class for everything thrown by this library.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad inputs: malformed files, impossible configs, shape mismatches, offsets
// that do not resolve. The CLI maps these to exit code 1.
struct validation_error : error {
  using error::error;
};

struct dimension_error : validation_error { using validation_error::validation_error; };
struct parse_error : validation_error { using validation_error::validation_error; };
struct format_error : validation_error { using validation_error::validation_error; };
struct structure_error : validation_error { using validation_error::validation_error; };
struct config_error : validation_error { using validation_error::validation_error; };
struct usage_error : validation_error { using validation_error::validation_error; };
struct lookup_error : validation_error { using validation_error::validation_error; };
struct coverage_error : validation_error { using validation_error::validation_error; };
struct alignment_error : validation_error { using validation_error::validation_error; };
struct duplication_error : validation_error { using validation_error::validation_error; };
struct batch_error : validation_error { using validation_error::validation_error; };

// Failures at run time: divergence, non-finite values. CLI exit code 2.
struct training_error : error { using error::error; };
struct evaluation_error : error { using error::error; };

}  // namespace rgat
