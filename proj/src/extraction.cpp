#include "autoscore/extraction.hpp"

#include <optional>
#include <string>

#include "autoscore/common.hpp"
#include "autoscore/error.hpp"

namespace autoscore {

namespace {

struct Marker {
  std::size_t begin;
  std::size_t end;
  std::string_view token;
};

std::optional<ProficiencyLabel> match_token(std::string_view token) {
  const auto folded = to_lower_ascii(trim(token));
  for (auto label : kAllLabels) {
    if (to_lower_ascii(label_name(label)) == folded) return label;
  }
  return std::nullopt;
}

}  // namespace

ExtractionResult extract_rating(std::string_view reply_text, const Scale& scale) {
  std::optional<Marker> last;
  std::size_t count = 0;
  std::size_t pos = 0;
  while (true) {
    const auto open = reply_text.find("[[", pos);
    if (open == std::string_view::npos) break;
    const auto close = reply_text.find("]]", open + 2);
    if (close == std::string_view::npos) break;
    // In "[[[x]]" or "[[a [[b]]" the innermost opening pair binds.
    const auto nested = reply_text.find("[[", open + 1);
    if (nested != std::string_view::npos && nested < close) {
      pos = nested;
      continue;
    }
    last = Marker{open, close + 2, reply_text.substr(open + 2, close - open - 2)};
    ++count;
    pos = close + 2;
  }

  if (!last) throw Error(ErrorCode::NoRatingFound, "reply contains no [[rating]] marker");

  const auto label = match_token(last->token);
  if (!label) {
    throw Error(ErrorCode::UnknownLabelToken,
                "rating marker [[" + std::string(last->token) + "]] names no proficiency label");
  }
  if (!scale.contains(*label)) {
    throw Error(ErrorCode::OffScaleLabel, "label " + std::string(label_name(*label)) + " is not on the " +
                                              std::string(scale.name()) + " scale");
  }
  return ExtractionResult{*label, last->begin, last->end, count};
}

}  // namespace autoscore
