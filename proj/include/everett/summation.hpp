#pragma once

namespace everett {

// Kahan compensated accumulator. All weight sums run through this in a fixed
// loop order so results are bit-reproducible run to run.
class KahanSum {
public:
    void add(double x) {
        const double y = x - compensation_;
        const double t = total_ + y;
        compensation_ = (t - total_) - y;
        total_ = t;
    }
    double value() const { return total_; }

private:
    double total_ = 0.0;
    double compensation_ = 0.0;
};

}  // namespace everett
