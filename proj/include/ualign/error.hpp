#ifndef UALIGN_ERROR_HPP_
#define UALIGN_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace ualign {

// Base of every error raised by the pipeline. Callers that only need a
// one-line diagnostic can catch this and print what().
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : Error("config error: " + field + ": " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class SamplingError : public Error {
 public:
  SamplingError(const std::string& question_id, int exemplar,
                const std::string& message)
      : Error("sampling error: question " + question_id + ", exemplar " +
              std::to_string(exemplar) + ": " + message),
        question_id_(question_id),
        exemplar_(exemplar) {}
  const std::string& question_id() const { return question_id_; }
  int exemplar() const { return exemplar_; }

 private:
  std::string question_id_;
  int exemplar_;
};

class ClusteringError : public Error {
 public:
  ClusteringError(std::size_t a, std::size_t b, std::size_t c,
                  const std::string& message)
      : Error(message), triple_{a, b, c} {}
  // Indices (a, b, c) with a~b, b~c and not a~c.
  const std::size_t* triple() const { return triple_; }

 private:
  std::size_t triple_[3];
};

class AssemblyError : public Error {
 public:
  using Error::Error;
};

class LoadError : public Error {
 public:
  LoadError(std::size_t line, const std::string& message)
      : Error("load error at line " + std::to_string(line) + ": " + message),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  ValidationError(const std::string& field, const std::string& message)
      : Error("validation error: " + field + ": " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

class InitializationError : public Error {
 public:
  using Error::Error;
};

class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

class PrerequisiteError : public Error {
 public:
  PrerequisiteError(const std::string& missing_stage,
                    const std::string& message)
      : Error(message), missing_stage_(missing_stage) {}
  const std::string& missing_stage() const { return missing_stage_; }

 private:
  std::string missing_stage_;
};

}  // namespace ualign

#endif  // UALIGN_ERROR_HPP_
