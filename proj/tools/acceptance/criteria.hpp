#pragma once

#include <sstream>
#include <string>

namespace tenkit::acceptance {

/// Collects failed checks; a criterion passes when none were recorded.
class Checker {
public:
  void require(bool ok, const std::string& what) {
    if (!ok && failures_++ < 3) notes_ << (notes_.tellp() > 0 ? "; " : "") << what;
  }
  void note(const std::string& s) { info_ << (info_.tellp() > 0 ? ", " : "") << s; }
  bool ok() const { return failures_ == 0; }
  std::string detail() const {
    return ok() ? info_.str() : std::to_string(failures_) + " failed: " + notes_.str();
  }

private:
  int failures_ = 0;
  std::ostringstream notes_;
  std::ostringstream info_;
};

std::string fmt(double x);

void criterion_conventions(Checker& c);
void criterion_decompositions(Checker& c);
void criterion_storage(Checker& c);
void criterion_completion(Checker& c);
void criterion_uq(Checker& c);
void criterion_quadrature(Checker& c);
void criterion_hierarchical(Checker& c);
void criterion_mor(Checker& c);
void criterion_volterra(Checker& c);
void criterion_determinism(Checker& c);

}  // namespace tenkit::acceptance
