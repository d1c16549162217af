#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace omnifmi {

// Base class for every error raised by the library. `code()` is a stable
// machine-readable identifier used by the CLI error line.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class ParseError : public Error {
 public:
  ParseError(std::string section, const std::string& what)
      : Error("parse_error", "[" + section + "] " + what), section_(std::move(section)) {}
  const std::string& section() const noexcept { return section_; }

 private:
  std::string section_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error("invalid_argument", what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config_error", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io_error", what) {}
};

class DegenerateRayError : public Error {
 public:
  explicit DegenerateRayError(const std::string& what) : Error("degenerate_ray", what) {}
};

class OutOfFovError : public Error {
 public:
  explicit OutOfFovError(const std::string& what) : Error("out_of_fov", what) {}
};

// Several radii satisfy the projection; all of them are reported.
class AmbiguousRayError : public Error {
 public:
  AmbiguousRayError(std::vector<double> candidates, const std::string& what)
      : Error("ambiguous_ray", what), candidates_(std::move(candidates)) {}
  const std::vector<double>& candidate_radii() const noexcept { return candidates_; }

 private:
  std::vector<double> candidates_;
};

class OutOfAnnulusError : public Error {
 public:
  explicit OutOfAnnulusError(const std::string& what) : Error("out_of_annulus", what) {}
};

class DegenerateSignalError : public Error {
 public:
  explicit DegenerateSignalError(const std::string& what) : Error("degenerate_signal", what) {}
};

class EmptyFieldError : public Error {
 public:
  explicit EmptyFieldError(const std::string& what) : Error("empty_field", what) {}
};

class InsufficientCorrespondencesError : public Error {
 public:
  InsufficientCorrespondencesError(int count, const std::string& what)
      : Error("insufficient_correspondences", what), count_(count) {}
  int count() const noexcept { return count_; }

 private:
  int count_;
};

class NoConsensusError : public Error {
 public:
  NoConsensusError(int best_inliers, const std::string& what)
      : Error("no_consensus", what), best_inliers_(best_inliers) {}
  int best_inlier_count() const noexcept { return best_inliers_; }

 private:
  int best_inliers_;
};

class EvaluationError : public Error {
 public:
  explicit EvaluationError(const std::string& what) : Error("evaluation_error", what) {}
};

class FrameReadError : public Error {
 public:
  FrameReadError(int frame_index, const std::string& what)
      : Error("frame_read_error", "frame " + std::to_string(frame_index) + ": " + what),
        frame_index_(frame_index) {}
  int frame_index() const noexcept { return frame_index_; }

 private:
  int frame_index_;
};

}  // namespace omnifmi
