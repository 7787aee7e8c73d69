#include "lang/parser.hpp"

#include <cctype>
#include <charconv>
#include <map>
#include <vector>

#include "common/error.hpp"

namespace retro::lang {

namespace {

enum class Tok {
    ident, integer, assign, semi, comma, lbrace, rbrace, lparen, rparen, lbracket, rbracket,
    plus, minus, star, slash, percent, eqeq, gt, lt, bang, end,
};

struct Token {
    Tok kind = Tok::end;
    std::string text;
    std::uint64_t number = 0;
    int line = 1;
    int column = 1;
};

std::vector<Token> lex(std::string_view src)
{
    std::vector<Token> out;
    int line = 1;
    int col = 1;
    std::size_t i = 0;

    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else if ((static_cast<unsigned char>(src[i]) & 0xC0) != 0x80) {
                ++col;
            }
        }
    };

    while (i < src.size()) {
        const char ch = src[i];
        if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') {
            advance(1);
            continue;
        }
        if (src.substr(i, 2) == "//") {
            while (i < src.size() && src[i] != '\n') {
                advance(1);
            }
            continue;
        }
        if (src.substr(i, 2) == "/*") {
            const int l = line;
            const int c = col;
            const auto close = src.find("*/", i + 2);
            if (close == std::string_view::npos) {
                throw ParseError(l, c, "unterminated block comment");
            }
            advance(close + 2 - i);
            continue;
        }

        Token t;
        t.line = line;
        t.column = col;

        if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
            std::size_t j = i;
            while (j < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) {
                ++j;
            }
            t.kind = Tok::ident;
            t.text = std::string(src.substr(i, j - i));
            advance(j - i);
            out.push_back(std::move(t));
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(ch))) {
            std::size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
                ++j;
            }
            t.kind = Tok::integer;
            t.text = std::string(src.substr(i, j - i));
            auto [ptr, ec] = std::from_chars(src.data() + i, src.data() + j, t.number);
            if (ec != std::errc{}) {
                throw ParseError(line, col, "integer literal out of range");
            }
            advance(j - i);
            out.push_back(std::move(t));
            continue;
        }
        // U+00D7 MULTIPLICATION SIGN, as in hand-transcribed listings
        if (src.substr(i, 2) == "\xC3\x97") {
            t.kind = Tok::star;
            t.text = "*";
            advance(2);
            out.push_back(std::move(t));
            continue;
        }

        std::size_t len = 1;
        switch (ch) {
        case ':':
            if (src.substr(i, 2) != ":=") {
                throw ParseError(line, col, "expected ':='");
            }
            t.kind = Tok::assign;
            len = 2;
            break;
        case '=':
            if (src.substr(i, 2) != "==") {
                throw ParseError(line, col, "unexpected '=' (assignment is ':=')");
            }
            t.kind = Tok::eqeq;
            len = 2;
            break;
        case ';': t.kind = Tok::semi; break;
        case ',': t.kind = Tok::comma; break;
        case '{': t.kind = Tok::lbrace; break;
        case '}': t.kind = Tok::rbrace; break;
        case '(': t.kind = Tok::lparen; break;
        case ')': t.kind = Tok::rparen; break;
        case '[': t.kind = Tok::lbracket; break;
        case ']': t.kind = Tok::rbracket; break;
        case '+': t.kind = Tok::plus; break;
        case '-': t.kind = Tok::minus; break;
        case '*': t.kind = Tok::star; break;
        case '/': t.kind = Tok::slash; break;
        case '%': t.kind = Tok::percent; break;
        case '>': t.kind = Tok::gt; break;
        case '<': t.kind = Tok::lt; break;
        case '!': t.kind = Tok::bang; break;
        default:
            throw ParseError(line, col, std::string("unexpected character '") + ch + "'");
        }
        t.text = std::string(src.substr(i, len));
        advance(len);
        out.push_back(std::move(t));
    }

    Token eof;
    eof.kind = Tok::end;
    eof.line = line;
    eof.column = col;
    out.push_back(eof);
    return out;
}

bool is_keyword(const std::string& s)
{
    static const char* const kw[] = {"int", "thread", "while", "if", "else", "skip",
                                     "wait", "signal", "true", "false"};
    for (const char* k : kw) {
        if (s == k) {
            return true;
        }
    }
    return false;
}

class Parser {
public:
    Parser(std::string_view text, const std::set<std::string>& constants)
        : toks_(lex(text)), constants_(constants)
    {
        prog_.constant_names = constants;
    }

    Program run()
    {
        while (at_ident("int")) {
            parse_decl(-1);
        }
        while (at_ident("thread")) {
            parse_thread();
        }
        if (peek().kind != Tok::end) {
            fail("expected 'int' declaration or 'thread'");
        }
        if (prog_.threads.empty()) {
            fail("program declares no thread");
        }
        return std::move(prog_);
    }

private:
    const Token& peek(std::size_t ahead = 0) const
    {
        return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
    }

    bool at(Tok k) const { return peek().kind == k; }
    bool at_ident(const char* word) const { return at(Tok::ident) && peek().text == word; }

    [[noreturn]] void fail(const std::string& msg) const
    {
        throw ParseError(peek().line, peek().column, msg);
    }

    [[noreturn]] void fail_at(const Token& t, const std::string& msg) const
    {
        throw ParseError(t.line, t.column, msg);
    }

    Token expect(Tok k, const char* what)
    {
        if (!at(k)) {
            fail(std::string("expected ") + what);
        }
        return toks_[pos_++];
    }

    void expect_word(const char* word)
    {
        if (!at_ident(word)) {
            fail(std::string("expected '") + word + "'");
        }
        ++pos_;
    }

    void skip_semis()
    {
        while (at(Tok::semi)) {
            ++pos_;
        }
    }

    std::string expect_name()
    {
        auto t = expect(Tok::ident, "identifier");
        if (is_keyword(t.text)) {
            fail_at(t, "keyword '" + t.text + "' used as identifier");
        }
        return t.text;
    }

    std::int64_t signed_literal()
    {
        bool neg = false;
        if (at(Tok::minus)) {
            neg = true;
            ++pos_;
        }
        auto t = expect(Tok::integer, "integer literal");
        if (neg) {
            if (t.number > static_cast<std::uint64_t>(INT64_MAX) + 1) {
                fail_at(t, "integer literal out of range");
            }
            return static_cast<std::int64_t>(0 - t.number);
        }
        if (t.number > static_cast<std::uint64_t>(INT64_MAX)) {
            fail_at(t, "integer literal out of range");
        }
        return static_cast<std::int64_t>(t.number);
    }

    void parse_decl(int thread)
    {
        const Token start = peek();
        expect_word("int");
        const Token name_tok = peek();
        VarDecl d;
        d.name = expect_name();
        d.thread = thread;
        d.line = start.line;

        if (constants_.count(d.name)) {
            fail_at(name_tok, "'" + d.name + "' is a named constant");
        }
        for (const auto& other : prog_.vars) {
            if (other.name != d.name) {
                continue;
            }
            if (other.thread == thread) {
                fail_at(name_tok, "duplicate declaration of '" + d.name + "'");
            }
            if (other.is_global() && thread >= 0) {
                fail_at(name_tok, "local '" + d.name + "' shadows a global");
            }
        }

        if (at(Tok::lbracket)) {
            ++pos_;
            d.is_array = true;
            const Token size_tok = peek();
            if (at(Tok::integer)) {
                d.size.value = signed_literal();
                if (d.size.value <= 0) {
                    fail_at(size_tok, "array size must be positive");
                }
            } else if (at(Tok::ident) && constants_.count(peek().text)) {
                d.size.constant = peek().text;
                ++pos_;
            } else {
                fail_at(size_tok, "array size must be a positive literal or a named constant");
            }
            expect(Tok::rbracket, "']'");
        }

        if (at(Tok::assign)) {
            ++pos_;
            if (d.is_array) {
                expect(Tok::lbrace, "'{' initializer list");
                std::vector<std::int64_t> values;
                if (!at(Tok::rbrace)) {
                    values.push_back(signed_literal());
                    while (at(Tok::comma)) {
                        ++pos_;
                        values.push_back(signed_literal());
                    }
                }
                expect(Tok::rbrace, "'}'");
                if (!d.size.symbolic() && static_cast<std::int64_t>(values.size()) != d.size.value) {
                    fail_at(start, "initializer list length does not match array size");
                }
                d.array_init = std::move(values);
            } else if (at(Tok::ident)) {
                if (!constants_.count(peek().text)) {
                    fail("scalar initializer must be a literal or a named constant");
                }
                d.scalar_init = IntOrConst{0, peek().text};
                ++pos_;
            } else {
                d.scalar_init = IntOrConst{signed_literal(), {}};
            }
        }
        expect(Tok::semi, "';' after declaration");

        const auto id = static_cast<VarId>(prog_.vars.size());
        prog_.vars.push_back(std::move(d));
        if (thread >= 0) {
            prog_.threads[static_cast<std::size_t>(thread)].locals.push_back(id);
        }
    }

    void parse_thread()
    {
        expect_word("thread");
        const Token name_tok = peek();
        ThreadDef t;
        t.name = expect_name();
        for (const auto& other : prog_.threads) {
            if (other.name == t.name) {
                fail_at(name_tok, "duplicate thread '" + t.name + "'");
            }
        }
        const int index = static_cast<int>(prog_.threads.size());
        prog_.threads.push_back(t);
        current_thread_ = index;

        const Token open = expect(Tok::lbrace, "'{'");
        while (at_ident("int")) {
            parse_decl(index);
        }
        const CommandId body = new_command(CommandKind::seq, open.line, kNoCommand);
        parse_seq_into(body);
        expect(Tok::rbrace, "'}' closing thread");
        prog_.threads[static_cast<std::size_t>(index)].body = body;
        current_thread_ = -1;
    }

    CommandId new_command(CommandKind kind, int line, CommandId parent)
    {
        Command c;
        c.kind = kind;
        c.id = static_cast<CommandId>(prog_.commands.size());
        c.parent = parent;
        c.thread = current_thread_;
        c.line = line;
        prog_.commands.push_back(std::move(c));
        if (parent != kNoCommand) {
            prog_.commands[static_cast<std::size_t>(parent)].children.push_back(
                prog_.commands.back().id);
        }
        return prog_.commands.back().id;
    }

    Command& cmd(CommandId id) { return prog_.commands[static_cast<std::size_t>(id)]; }

    void parse_seq_into(CommandId seq)
    {
        skip_semis();
        while (!at(Tok::rbrace) && !at(Tok::end)) {
            if (at_ident("int")) {
                fail("declarations must precede commands");
            }
            parse_command(seq);
            skip_semis();
        }
    }

    void parse_block_into(CommandId seq)
    {
        expect(Tok::lbrace, "'{'");
        parse_seq_into(seq);
        expect(Tok::rbrace, "'}'");
    }

    void parse_command(CommandId parent)
    {
        const Token t = peek();
        if (t.kind != Tok::ident) {
            fail("expected a command");
        }
        if (t.text == "skip") {
            ++pos_;
            new_command(CommandKind::skip, t.line, parent);
            return;
        }
        if (t.text == "wait" || t.text == "signal") {
            ++pos_;
            const auto id = new_command(t.text == "wait" ? CommandKind::wait : CommandKind::signal,
                                        t.line, parent);
            expect(Tok::lparen, "'('");
            const Token name_tok = peek();
            const auto name = expect_name();
            expect(Tok::rparen, "')'");
            const auto ref = resolve(name, name_tok);
            const auto& decl = prog_.var(ref.id);
            if (!decl.is_global() || decl.is_array) {
                fail_at(name_tok, t.text + " target '" + name + "' must be a global scalar");
            }
            cmd(id).semaphore = ref;
            return;
        }
        if (t.text == "while") {
            ++pos_;
            const auto id = new_command(CommandKind::while_, t.line, parent);
            expect(Tok::lparen, "'('");
            auto guard = parse_cond();
            expect(Tok::rparen, "')'");
            cmd(id).guard = std::move(guard);
            const auto body = new_command(CommandKind::seq, peek().line, id);
            parse_block_into(body);
            return;
        }
        if (t.text == "if") {
            ++pos_;
            const auto id = new_command(CommandKind::if_, t.line, parent);
            expect(Tok::lparen, "'('");
            auto guard = parse_cond();
            expect(Tok::rparen, "')'");
            cmd(id).guard = std::move(guard);
            const auto then_seq = new_command(CommandKind::seq, peek().line, id);
            parse_block_into(then_seq);
            const auto else_seq = new_command(CommandKind::seq, peek().line, id);
            if (at_ident("else")) {
                ++pos_;
                parse_block_into(else_seq);
            }
            return;
        }
        if (is_keyword(t.text)) {
            fail("unexpected keyword '" + t.text + "'");
        }

        // assignment
        ++pos_;
        const auto id = new_command(CommandKind::assign, t.line, parent);
        const auto ref = resolve(t.text, t);
        if (at(Tok::lbracket)) {
            if (!prog_.var(ref.id).is_array) {
                fail_at(t, "'" + t.text + "' is not an array");
            }
            ++pos_;
            auto index = parse_expr();
            expect(Tok::rbracket, "']'");
            cmd(id).target_index = std::move(index);
        } else if (prog_.var(ref.id).is_array) {
            fail_at(t, "array '" + t.text + "' assigned without an index");
        }
        cmd(id).target = ref;
        expect(Tok::assign, "':='");
        cmd(id).value = parse_expr();
    }

    VarRef resolve(const std::string& name, const Token& at_tok) const
    {
        // locals of the current thread first, then globals
        for (std::size_t i = 0; i < prog_.vars.size(); ++i) {
            const auto& d = prog_.vars[i];
            if (d.name == name && d.thread == current_thread_) {
                return {name, static_cast<VarId>(i)};
            }
        }
        for (std::size_t i = 0; i < prog_.vars.size(); ++i) {
            const auto& d = prog_.vars[i];
            if (d.name == name && d.is_global()) {
                return {name, static_cast<VarId>(i)};
            }
        }
        if (constants_.count(name)) {
            fail_at(at_tok, "cannot assign or wait on named constant '" + name + "'");
        }
        fail_at(at_tok, "undeclared variable '" + name + "'");
    }

    CondPtr parse_cond()
    {
        if (at(Tok::bang)) {
            ++pos_;
            return Cond::negate(parse_cond_atom());
        }
        return parse_cond_atom();
    }

    CondPtr parse_cond_atom()
    {
        if (at_ident("true") || at_ident("false")) {
            const bool v = peek().text == "true";
            ++pos_;
            return Cond::boolean(v);
        }
        if (at(Tok::bang)) {
            return parse_cond();
        }
        const std::size_t save = pos_;
        try {
            return parse_comparison();
        } catch (const ParseError&) {
            if (toks_[save].kind != Tok::lparen) {
                throw;
            }
            pos_ = save + 1;
            auto inner = parse_cond();
            expect(Tok::rparen, "')'");
            return inner;
        }
    }

    CondPtr parse_comparison()
    {
        auto lhs = parse_expr();
        if (at(Tok::eqeq)) {
            ++pos_;
            return Cond::compare(CmpOp::eq, lhs, parse_expr());
        }
        if (at(Tok::gt)) {
            ++pos_;
            return Cond::compare(CmpOp::gt, lhs, parse_expr());
        }
        if (at(Tok::lt)) {
            // a < b is read as b > a
            ++pos_;
            auto rhs = parse_expr();
            return Cond::compare(CmpOp::gt, rhs, lhs);
        }
        fail("expected '==', '>' or '<' in condition");
    }

    ExprPtr parse_expr()
    {
        auto lhs = parse_term();
        while (at(Tok::plus) || at(Tok::minus)) {
            const auto op = at(Tok::plus) ? BinOp::add : BinOp::sub;
            ++pos_;
            lhs = Expr::binary(op, lhs, parse_term());
        }
        return lhs;
    }

    ExprPtr parse_term()
    {
        auto lhs = parse_primary();
        while (at(Tok::star) || at(Tok::slash) || at(Tok::percent)) {
            const auto op = at(Tok::star) ? BinOp::mul : at(Tok::slash) ? BinOp::div : BinOp::mod;
            ++pos_;
            lhs = Expr::binary(op, lhs, parse_primary());
        }
        return lhs;
    }

    ExprPtr parse_primary()
    {
        const Token t = peek();
        if (t.kind == Tok::integer || t.kind == Tok::minus) {
            if (t.kind == Tok::minus && peek(1).kind != Tok::integer) {
                fail("unary minus applies to integer literals only");
            }
            return Expr::literal(signed_literal());
        }
        if (t.kind == Tok::lparen) {
            ++pos_;
            auto e = parse_expr();
            expect(Tok::rparen, "')'");
            return e;
        }
        if (t.kind == Tok::ident) {
            if (t.text == "true" || t.text == "false") {
                fail("boolean literal in arithmetic context");
            }
            if (is_keyword(t.text)) {
                fail("unexpected keyword '" + t.text + "'");
            }
            ++pos_;
            const bool declared = is_declared(t.text);
            if (!declared && constants_.count(t.text)) {
                if (at(Tok::lbracket)) {
                    fail_at(t, "named constant '" + t.text + "' indexed");
                }
                return Expr::constant(t.text);
            }
            const auto ref = resolve(t.text, t);
            if (at(Tok::lbracket)) {
                if (!prog_.var(ref.id).is_array) {
                    fail_at(t, "'" + t.text + "' is not an array");
                }
                ++pos_;
                auto index = parse_expr();
                expect(Tok::rbracket, "']'");
                return Expr::element(ref, std::move(index));
            }
            if (prog_.var(ref.id).is_array) {
                fail_at(t, "array '" + t.text + "' used without an index");
            }
            return Expr::variable(ref);
        }
        fail("expected an expression");
    }

    bool is_declared(const std::string& name) const
    {
        for (const auto& d : prog_.vars) {
            if (d.name == name && (d.is_global() || d.thread == current_thread_)) {
                return true;
            }
        }
        return false;
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    const std::set<std::string>& constants_;
    Program prog_;
    int current_thread_ = -1;
};

std::string render_int_or_const(const IntOrConst& v)
{
    return v.symbolic() ? v.constant : std::to_string(v.value);
}

void print_decl(const VarDecl& d, const std::string& indent, std::string& out)
{
    out += indent + "int " + d.name;
    if (d.is_array) {
        out += "[" + render_int_or_const(d.size) + "]";
    }
    if (d.scalar_init) {
        out += " := " + render_int_or_const(*d.scalar_init);
    }
    if (d.array_init) {
        out += " := {";
        for (std::size_t i = 0; i < d.array_init->size(); ++i) {
            out += (i ? ", " : "") + std::to_string((*d.array_init)[i]);
        }
        out += "}";
    }
    out += ";\n";
}

void print_command(const Program& p, CommandId id, int depth, std::string& out)
{
    const auto& c = p.command(id);
    const std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
    switch (c.kind) {
    case CommandKind::seq:
        for (auto child : c.children) {
            print_command(p, child, depth, out);
        }
        return;
    case CommandKind::skip:
        out += indent + "skip;\n";
        return;
    case CommandKind::wait:
    case CommandKind::signal:
        out += indent + (c.kind == CommandKind::wait ? "wait(" : "signal(") + c.semaphore.name + ");\n";
        return;
    case CommandKind::assign:
        out += indent + render(lhs_of(c)) + " := " + render(*c.value) + ";\n";
        return;
    case CommandKind::while_:
        out += indent + "while (" + render(*c.guard) + ") {\n";
        print_command(p, c.children.at(0), depth + 1, out);
        out += indent + "}\n";
        return;
    case CommandKind::if_:
        out += indent + "if (" + render(*c.guard) + ") {\n";
        print_command(p, c.children.at(0), depth + 1, out);
        out += indent + "} else {\n";
        print_command(p, c.children.at(1), depth + 1, out);
        out += indent + "}\n";
        return;
    }
}

} // namespace

Program parse_program(std::string_view text, const std::set<std::string>& constants)
{
    return Parser(text, constants).run();
}

Program parse_program(std::string_view text, const std::map<std::string, std::int64_t>& constants)
{
    std::set<std::string> names;
    for (const auto& [k, v] : constants) {
        names.insert(k);
    }
    return parse_program(text, names);
}

std::string pretty_print(const Program& program)
{
    std::string out;
    for (const auto& d : program.vars) {
        if (d.is_global()) {
            print_decl(d, "", out);
        }
    }
    for (const auto& t : program.threads) {
        out += "\nthread " + t.name + " {\n";
        for (auto v : t.locals) {
            print_decl(program.var(v), "  ", out);
        }
        print_command(program, t.body, 1, out);
        out += "}\n";
    }
    return out;
}

} // namespace retro::lang
