#include <gtest/gtest.h>
#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <random>

#include "yesql/urlkit.hpp"

using yesql::urlkit::normalize_text;

namespace {

std::vector<UChar32> code_points(const std::string& s) {
  std::vector<UChar32> out;
  int32_t i = 0;
  const auto len = static_cast<int32_t>(s.size());
  while (i < len) {
    UChar32 c;
    U8_NEXT(s.data(), i, len, c);
    out.push_back(c);
  }
  return out;
}

}  // namespace

TEST(NormalizeText, Examples) {
  EXPECT_EQ(normalize_text("\xc3\x89lection Pr\xc3\xa9sidentielle"), "election presidentielle");
  EXPECT_EQ(normalize_text(""), "");
  EXPECT_EQ(normalize_text("ABC  \t def"), "abc def");
}

TEST(NormalizeText, TrimsAndCollapsesUnicodeSpaces) {
  EXPECT_EQ(normalize_text("  a\xc2\xa0\xc2\xa0" "b\n\r\nc  "), "a b c");
  EXPECT_EQ(normalize_text("\xe3\x80\x80x\xe2\x80\x83y"), "x y");
}

TEST(NormalizeText, CompatibilityForms) {
  EXPECT_EQ(normalize_text("\xef\xbd\x8b\xef\xbd\x85\xef\xbd\x99"), "key");  // fullwidth
  EXPECT_EQ(normalize_text("\xef\xac\x81n"), "fin");                         // fi ligature
  EXPECT_EQ(normalize_text("Stra\xc3\x9f" "e"), "strasse");
  EXPECT_EQ(normalize_text("\xc5\x92uvre"), "\xc5\x93uvre");  // no decomposition for the ligature
}

TEST(NormalizeText, DecomposedInputMatchesPrecomposed) {
  EXPECT_EQ(normalize_text("e\xcc\x81t\xc3\xa9"), "ete");
}

TEST(NormalizeText, InvalidUtf8BecomesReplacementCharacter) {
  EXPECT_EQ(normalize_text("a\xff" "b"), "a\xef\xbf\xbd" "b");
  EXPECT_EQ(normalize_text("\xc3"), "\xef\xbf\xbd");
}

TEST(NormalizeText, PropertiesOnRandomText) {
  const std::vector<std::string> pieces = {
      "A", "z", " ", "\t", "\n", "\xc3\x89", "\xc3\xa9", "\xc3\x87", "\xc3\x9f", "\xcc\x81", "\xcc\x88",
      "\xc2\xa0", "\xce\xa3", "\xd0\x96", "\xef\xbc\xa1", "\xe2\x84\xab", "\xc7\x85", "\xe1\xba\x9e", "\xff", "1",
      "KEYWORD1", "Ã", "\xe2\x80\x82"};
  std::mt19937_64 rng(7);
  for (int i = 0; i < 3000; ++i) {
    std::string s;
    const int len = static_cast<int>(rng() % 16);
    for (int k = 0; k < len; ++k) s += pieces[rng() % pieces.size()];
    const std::string n = normalize_text(s);
    EXPECT_EQ(normalize_text(n), n) << s;
    for (UChar32 c : code_points(n)) {
      EXPECT_FALSE(u_isUUppercase(c)) << s;
      EXPECT_NE(u_charType(c), U_NON_SPACING_MARK) << s;
    }
    EXPECT_EQ(n.find("  "), std::string::npos);
    if (!n.empty()) {
      EXPECT_NE(n.front(), ' ');
      EXPECT_NE(n.back(), ' ');
    }
  }
}
