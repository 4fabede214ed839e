#pragma once

#include <stdexcept>
#include <string>

namespace delayshare {

// Root of every exception thrown by the library.
class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class domain_error : public error {
public:
  using error::error;
};

// A stated invariant of an input (e.g. normalized weights) does not hold.
class invariant_error : public error {
public:
  using error::error;
};

// Matrix or vector shapes disagree.
class dimension_error : public error {
public:
  using error::error;
};

// Protocol steps invoked out of order (e.g. updating before outcomes arrive).
class protocol_error : public error {
public:
  using error::error;
};

// Invalid algorithm or experiment configuration.
class config_error : public error {
public:
  using error::error;
};

// Per-slot loss outside [0,1] where a bounded loss is required.
class bounded_loss_error : public error {
public:
  using error::error;
};

// Malformed input file.
class load_error : public error {
public:
  using error::error;
};

// Detector results that cannot be aligned to the series timestamps.
class alignment_error : public load_error {
public:
  using load_error::load_error;
};

// Metric requested on data for which it is not defined.
class undefined_metric_error : public error {
public:
  using error::error;
};

} // namespace delayshare
