#pragma once

#include <cstddef>
#include <vector>

namespace cyberbm {

struct MitigationMeasure {
    double beta = 0.0;   ///< annual investment
    double gamma = 0.0;  ///< per-event severity reduction
};

/// Mutually exclusive self-mitigation measures indexed 0..D. Measure 0 is
/// "do nothing" and must have zero cost and zero effect.
class MitigationMenu {
public:
    explicit MitigationMenu(std::vector<MitigationMeasure> measures);

    std::size_t size() const { return measures_.size(); }
    double beta(std::size_t d) const { return measures_.at(d).beta; }
    double gamma(std::size_t d) const { return measures_.at(d).gamma; }
    const std::vector<MitigationMeasure>& measures() const { return measures_; }

private:
    std::vector<MitigationMeasure> measures_;
};

}  // namespace cyberbm
