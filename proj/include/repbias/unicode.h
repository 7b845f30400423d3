#ifndef REPBIAS_UNICODE_H_
#define REPBIAS_UNICODE_H_

#include <string>
#include <string_view>

namespace repbias {

// NFC-normalizes UTF-8 text. Pure ASCII input is returned unchanged without
// touching ICU. Invalid UTF-8 sequences become U+FFFD.
std::string NormalizeNfc(std::string_view utf8);

}  // namespace repbias

#endif  // REPBIAS_UNICODE_H_
