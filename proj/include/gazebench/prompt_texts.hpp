#pragma once

#include <string_view>

// Verbatim prompt building blocks. Do not reflow or "fix" anything in the
// corresponding .cpp: tests pin these byte-for-byte, including trailing
// whitespace and unusual punctuation.
namespace gazebench::prompting::texts {

extern const std::string_view kGfoTaskDescription;
extern const std::string_view kGfoPrBase;
extern const std::string_view kGfoPrCotBase;
extern const std::string_view kGfoPrCotStruct;
extern const std::string_view kGfoPrInContext;  // system portion, ends at the examples intro
extern const std::string_view kGfoInContextClose;

extern const std::string_view kSgTaskDescriptionLaeo;
extern const std::string_view kSgTaskDescriptionLah;
extern const std::string_view kSgTaskDescriptionSa;
extern const std::string_view kSgTaskPhraseLaeo;
extern const std::string_view kSgTaskPhraseLah;
extern const std::string_view kSgTaskPhraseSa;
extern const std::string_view kSgPrBase;
extern const std::string_view kSgPrCotBase;
extern const std::string_view kSgPrCotStruct;
extern const std::string_view kSgPrInContext;  // system portion, ends at the examples intro
extern const std::string_view kSgInContextClose;

extern const std::string_view kProbePrompt;  // <bounding box coordinates> placeholder

}  // namespace gazebench::prompting::texts
