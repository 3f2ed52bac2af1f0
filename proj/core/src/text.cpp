#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>

#include "yesql/error.hpp"
#include "yesql/urlkit.hpp"

namespace yesql {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::malformed_url: return "MalformedUrl";
    case Errc::unsupported_scheme: return "UnsupportedScheme";
    case Errc::store_unavailable: return "StoreUnavailable";
    case Errc::insufficient_privilege: return "InsufficientPrivilege";
    case Errc::schema_too_new: return "SchemaTooNew";
    case Errc::schema_missing: return "SchemaMissing";
    case Errc::expired_claim: return "ExpiredClaim";
    case Errc::unknown_token: return "UnknownToken";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::invalid_spec: return "InvalidSpec";
    case Errc::invalid_strategy: return "InvalidStrategy";
    case Errc::empty_targets: return "EmptyTargets";
    case Errc::address_in_use: return "AddressInUse";
    case Errc::io_error: return "IoError";
  }
  return "Unknown";
}

namespace urlkit {
namespace {

bool ascii_space_or_control(unsigned char c) { return c <= 0x20 || c == 0x7f; }

std::string normalize_ascii(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (ascii_space_or_control(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : static_cast<char>(c));
  }
  return out;
}

bool is_separator(UChar32 c) {
  return u_isUWhiteSpace(c) || u_iscntrl(c) || u_charType(c) == U_SPACE_SEPARATOR;
}

}  // namespace

std::string normalize_text(std::string_view text) {
  if (std::all_of(text.begin(), text.end(),
                  [](char c) { return static_cast<unsigned char>(c) < 0x80; })) {
    return normalize_ascii(text);
  }

  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfkd = icu::Normalizer2::getNFKDInstance(status);
  const icu::Normalizer2* nfkc = icu::Normalizer2::getNFKCInstance(status);
  if (U_FAILURE(status)) return normalize_ascii(text);

  // fromUTF8 substitutes U+FFFD for ill-formed sequences.
  const icu::UnicodeString source =
      icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString decomposed = nfkd->normalize(source, status);
  if (U_FAILURE(status)) return normalize_ascii(text);

  icu::UnicodeString stripped;
  for (int32_t i = 0; i < decomposed.length();) {
    const UChar32 c = decomposed.char32At(i);
    i += U16_LENGTH(c);
    if (u_charType(c) != U_NON_SPACING_MARK) stripped.append(c);
  }
  stripped.foldCase();
  icu::UnicodeString composed = nfkc->normalize(stripped, status);
  if (U_FAILURE(status)) return normalize_ascii(text);

  icu::UnicodeString collapsed;
  bool pending_space = false;
  for (int32_t i = 0; i < composed.length();) {
    const UChar32 c = composed.char32At(i);
    i += U16_LENGTH(c);
    if (is_separator(c)) {
      pending_space = !collapsed.isEmpty();
      continue;
    }
    if (pending_space) {
      collapsed.append(static_cast<UChar>(' '));
      pending_space = false;
    }
    collapsed.append(c);
  }
  std::string out;
  collapsed.toUTF8String(out);
  return out;
}

}  // namespace urlkit
}  // namespace yesql
