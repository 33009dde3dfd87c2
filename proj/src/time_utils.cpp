#include "ppmkit/time_utils.hpp"

#include <array>
#include <cctype>
#include <cstdio>

#include "ppmkit/error.hpp"

namespace ppm {

namespace {

// Days since 1970-01-01 for a proleptic Gregorian civil date.
// Howard Hinnant's days_from_civil algorithm.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    unsigned yoe = static_cast<unsigned>(y - era * 400);                  // [0, 399]
    unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;        // [0, 365]
    unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;                 // [0, 146096]
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    unsigned doe = static_cast<unsigned>(z - era * 146097);
    unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += m <= 2;
}

struct Cursor {
    std::string_view text;
    std::size_t pos = 0;

    bool done() const { return pos >= text.size(); }
    char peek() const { return done() ? '\0' : text[pos]; }

    int digits(int count, const char* what) {
        int value = 0;
        for (int i = 0; i < count; ++i) {
            if (done() || !std::isdigit(static_cast<unsigned char>(text[pos]))) {
                raise(ErrorKind::Parse, "invalid timestamp '", text, "': expected ", what);
            }
            value = value * 10 + (text[pos] - '0');
            ++pos;
        }
        return value;
    }

    bool eat(char c) {
        if (!done() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
};

}  // namespace

Minutes parse_iso8601_minutes(std::string_view text) {
    // Trim surrounding whitespace.
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text.empty()) raise(ErrorKind::Parse, "empty timestamp");

    Cursor cur{text};
    int year = cur.digits(4, "a 4-digit year");
    if (!cur.eat('-')) raise(ErrorKind::Parse, "invalid timestamp '", text, "': expected '-' after year");
    int month = cur.digits(2, "a 2-digit month");
    if (!cur.eat('-')) raise(ErrorKind::Parse, "invalid timestamp '", text, "': expected '-' after month");
    int day = cur.digits(2, "a 2-digit day");
    if (month < 1 || month > 12 || day < 1 || day > 31) {
        raise(ErrorKind::Parse, "invalid timestamp '", text, "': month/day out of range");
    }

    if (!cur.eat('T') && !cur.eat(' ') && !cur.eat('t')) {
        raise(ErrorKind::Parse, "invalid timestamp '", text, "': expected 'T' or ' ' before time");
    }
    int hour = cur.digits(2, "a 2-digit hour");
    if (!cur.eat(':')) raise(ErrorKind::Parse, "invalid timestamp '", text, "': expected ':' after hour");
    int minute = cur.digits(2, "a 2-digit minute");
    if (hour > 23 || minute > 59) {
        raise(ErrorKind::Parse, "invalid timestamp '", text, "': time out of range");
    }
    if (cur.eat(':')) {
        int second = cur.digits(2, "2-digit seconds");
        if (second > 60) raise(ErrorKind::Parse, "invalid timestamp '", text, "': seconds out of range");
        if (cur.eat('.')) {
            if (cur.done() || !std::isdigit(static_cast<unsigned char>(cur.peek()))) {
                raise(ErrorKind::Parse, "invalid timestamp '", text, "': expected fractional digits");
            }
            while (!cur.done() && std::isdigit(static_cast<unsigned char>(cur.peek()))) ++cur.pos;
        }
    }

    // Offset: Z, +HH:MM, +HHMM or +HH. Sub-hour offsets shift whole minutes.
    std::int64_t offset_minutes = 0;
    if (!cur.done()) {
        char c = cur.peek();
        if (c == 'Z' || c == 'z') {
            ++cur.pos;
        } else if (c == '+' || c == '-') {
            int sign = c == '+' ? 1 : -1;
            ++cur.pos;
            int oh = cur.digits(2, "a 2-digit offset hour");
            int om = 0;
            if (cur.eat(':')) {
                om = cur.digits(2, "a 2-digit offset minute");
            } else if (!cur.done() && std::isdigit(static_cast<unsigned char>(cur.peek()))) {
                om = cur.digits(2, "a 2-digit offset minute");
            }
            offset_minutes = sign * (oh * 60 + om);
        } else {
            raise(ErrorKind::Parse, "invalid timestamp '", text, "': unexpected trailing '", c, "'");
        }
    }
    if (!cur.done()) {
        raise(ErrorKind::Parse, "invalid timestamp '", text, "': trailing characters");
    }

    std::int64_t days = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
    return days * 1440 + hour * 60 + minute - offset_minutes;
}

std::string format_iso8601_minutes(Minutes minutes) {
    std::int64_t days = minutes >= 0 ? minutes / 1440 : (minutes - 1439) / 1440;
    std::int64_t rem = minutes - days * 1440;
    std::int64_t y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lldZ",
                  static_cast<long long>(y), m, d,
                  static_cast<long long>(rem / 60), static_cast<long long>(rem % 60));
    return buf;
}

}  // namespace ppm
