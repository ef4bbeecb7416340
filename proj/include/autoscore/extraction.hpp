#pragma once

#include <cstddef>
#include <string_view>

#include "autoscore/domain.hpp"

namespace autoscore {

struct ExtractionResult {
  ProficiencyLabel label = ProficiencyLabel::Beginning;
  // Byte offsets of the deciding "[[...]]" marker, end exclusive.
  std::size_t marker_begin = 0;
  std::size_t marker_end = 0;
  std::size_t marker_count = 0;
};

// Reads the rating from a model reply. The last "[[token]]" marker decides;
// the token is trimmed and case-folded before matching a label name.
// Throws NoRatingFound, UnknownLabelToken or OffScaleLabel.
ExtractionResult extract_rating(std::string_view reply_text, const Scale& scale);

}  // namespace autoscore
