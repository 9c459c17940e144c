#include <memoir/sentence_split.hpp>
#include <memoir/util.hpp>

#include <cctype>

namespace memoir {

namespace {

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_closing_quote(char c) {
    return c == '"' || c == '\'' || c == ')' || c == ']';
}

// Token ending at (and including) the period at position `dot`, scanning
// back over non-space characters: for "met Dr." this yields "dr.".
std::string token_before(const std::string& text, std::size_t dot) {
    std::size_t start = dot;
    while (start > 0 && !std::isspace(static_cast<unsigned char>(text[start - 1]))) {
        --start;
    }
    return to_lower(text.substr(start, dot - start + 1));
}

bool is_single_initial(const std::string& token) {
    // "j." — one alphabetic character plus the period.
    return token.size() == 2 && std::isalpha(static_cast<unsigned char>(token[0]));
}

} // namespace

const std::set<std::string>& default_abbreviations() {
    static const std::set<std::string> abbr = {
        "dr.", "mr.", "mrs.", "e.g.", "i.e.", "etc.", "vs.", "u.s.",
    };
    return abbr;
}

std::vector<std::string> segment_sentences(const std::string& content,
                                           const std::set<std::string>& abbreviations) {
    std::vector<std::string> out;
    const std::size_t n = content.size();
    std::size_t seg_start = 0;
    std::size_t i = 0;

    auto emit = [&](std::size_t end_exclusive) {
        std::string seg = trim(content.substr(seg_start, end_exclusive - seg_start));
        if (!seg.empty()) out.push_back(seg);
        seg_start = end_exclusive;
    };

    while (i < n) {
        if (!is_terminal(content[i])) {
            ++i;
            continue;
        }

        std::size_t run_end = i;
        while (run_end + 1 < n && is_terminal(content[run_end + 1])) ++run_end;
        bool lone_period = (run_end == i) && content[i] == '.';

        if (lone_period) {
            std::string tok = token_before(content, i);
            if (abbreviations.count(tok) > 0 || is_single_initial(tok)) {
                i = run_end + 1;
                continue;
            }
        }

        // Closing quotes/brackets belong to the sentence they terminate.
        std::size_t tail = run_end + 1;
        while (tail < n && is_closing_quote(content[tail])) ++tail;

        if (tail >= n) {
            emit(n);
            i = n;
            break;
        }

        std::size_t next = tail;
        while (next < n && std::isspace(static_cast<unsigned char>(content[next]))) ++next;
        bool boundary = (next >= n) ||
                        (next > tail && std::isupper(static_cast<unsigned char>(content[next])));
        if (boundary) {
            emit(tail);
            i = next;
        } else {
            i = tail;
        }
    }

    if (seg_start < n) emit(n);
    if (out.empty()) {
        std::string whole = trim(content);
        if (!whole.empty()) out.push_back(whole);
    }
    return out;
}

} // namespace memoir
