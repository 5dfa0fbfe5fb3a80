#pragma once

#include <span>
#include <vector>

#include "maskx/explain.hpp"

namespace maskx {

enum class CurveMode { representation, pixel };

struct Curve {
  std::vector<double> fractions;  // strictly increasing, 0 .. 1
  std::vector<double> values;     // retained probability at each fraction
};

// Insertion: order coefficients by mask value (representation mode) or pixels
// by explanation magnitude (pixel mode), most relevant first, and rebuild the
// image keeping the top-p set; the rest is zeroed (representation) or replaced
// by a Gaussian-blurred copy of the input (pixel). Ties break on flat index.
// steps+1 evenly spaced fractions.
Curve insertion_curve(const Classifier& model, const LinearRep& rep, const Image& x,
                      std::span<const double> mask, int target_class, int steps, CurveMode mode);

// Mirror image: the top-p set is deleted first; at p=0 the image is intact.
Curve deletion_curve(const Classifier& model, const LinearRep& rep, const Image& x,
                     std::span<const double> mask, int target_class, int steps, CurveMode mode);

Curve insertion_curve(const Classifier& model, const ExplanationResult& res, int steps,
                      CurveMode mode);
Curve deletion_curve(const Classifier& model, const ExplanationResult& res, int steps,
                     CurveMode mode);

}  // namespace maskx
