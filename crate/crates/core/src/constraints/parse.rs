//! Line-oriented DSL parser.
//!
//! ```text
//! # comment
//! room polygon (0,0) (6,0) (6,5) (0,5) height 2.8 door (3,0) [resizable]
//! room_scale 1.25
//! count(chair where front_against dining_table) in [3,6]
//! relation(against_wall, wardrobe, wall)
//! score(maximize_distance, dining_table, wall, weight=10)
//! occupancy in [0.1,0.5]
//! asset desk x [0.7,0.9] y [1.5,2.0]
//! hint delete_bias 1.5
//! ```

use std::collections::BTreeSet;
use std::fmt;

use super::program::{ConstraintProgram, CountConstraint, Objective, RelationConstraint, ScoreTerm, SemanticSelector, Target};
use crate::catalog::{AssetCatalog, DimRange};
use crate::geometry::{RoomSpec, Vec2};
use crate::scene::RelationKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub token: String,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {} (at {:?})", self.line, self.column, self.message, self.token)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Punct(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    text: String,
    column: usize,
}

fn tokenize(line: &str, line_no: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            out.push(Token { tok: Tok::Ident(text.clone()), text, column: start + 1 });
        } else if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' {
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                let exp_sign = (d == '-' || d == '+') && matches!(chars[i - 1], 'e' | 'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            let text: String = chars[start..i].iter().collect();
            match text.parse::<f64>() {
                Ok(v) if v.is_finite() => out.push(Token { tok: Tok::Number(v), text, column: start + 1 }),
                _ => {
                    return Err(ParseError { line: line_no, column: start + 1, token: text, message: "malformed number".into() })
                }
            }
        } else if "()[],=".contains(c) {
            i += 1;
            out.push(Token { tok: Tok::Punct(c), text: c.to_string(), column: start + 1 });
        } else {
            return Err(ParseError {
                line: line_no,
                column: start + 1,
                token: c.to_string(),
                message: "unexpected character".into(),
            });
        }
    }
    Ok(out)
}

struct Line<'a> {
    toks: Vec<Token>,
    pos: usize,
    line: usize,
    end_column: usize,
    catalog: &'a AssetCatalog,
}

impl<'a> Line<'a> {
    fn err_at(&self, k: usize, message: impl Into<String>) -> ParseError {
        match self.toks.get(k) {
            Some(t) => ParseError { line: self.line, column: t.column, token: t.text.clone(), message: message.into() },
            None => ParseError { line: self.line, column: self.end_column, token: String::new(), message: message.into() },
        }
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        self.err_at(self.pos, message)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.err("unexpected trailing token"))
        }
    }

    fn punct(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected '{c}'")))
        }
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err("expected identifier")),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(format!("expected '{kw}'"))),
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        match self.peek() {
            Some(Tok::Number(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.err("expected number")),
        }
    }

    fn point(&mut self) -> Result<Vec2, ParseError> {
        self.punct('(')?;
        let x = self.number()?;
        self.punct(',')?;
        let y = self.number()?;
        self.punct(')')?;
        Ok(Vec2::new(x, y))
    }

    /// `[a,b]` with a ≤ b; errors point at the opening bracket.
    fn range(&mut self) -> Result<(f64, f64, usize), ParseError> {
        let at = self.pos;
        self.punct('[')?;
        let a = self.number()?;
        self.punct(',')?;
        let b = self.number()?;
        self.punct(']')?;
        if a > b {
            return Err(self.err_at(at, format!("malformed range: {a} > {b}")));
        }
        Ok((a, b, at))
    }

    fn relation_kind(&mut self) -> Result<RelationKind, ParseError> {
        let at = self.pos;
        let name = self.ident()?;
        RelationKind::parse(&name).ok_or_else(|| self.err_at(at, format!("unknown relation kind '{name}'")))
    }

    fn tag_list(&mut self) -> Result<BTreeSet<String>, ParseError> {
        self.punct('[')?;
        let mut tags = BTreeSet::new();
        loop {
            let at = self.pos;
            let t = self.ident()?;
            if !self.catalog.has_tag(&t) {
                return Err(self.err_at(at, format!("unknown tag '{t}'")));
            }
            tags.insert(t);
            if !self.eat_punct(',') {
                break;
            }
        }
        self.punct(']')?;
        Ok(tags)
    }

    /// `cat`, `cat[Tag,...]` or `[Tag,...]`.
    fn selector(&mut self) -> Result<SemanticSelector, ParseError> {
        let mut sel = SemanticSelector::default_empty();
        if matches!(self.peek(), Some(Tok::Ident(_))) {
            let at = self.pos;
            let name = self.ident()?;
            if name == "wall" {
                return Err(self.err_at(at, "'wall' is not an object selector"));
            }
            if !self.catalog.has_category(&name) {
                return Err(self.err_at(at, format!("unknown category '{name}'")));
            }
            sel.category = Some(name);
            if self.peek() == Some(&Tok::Punct('[')) {
                sel.tags = self.tag_list()?;
            }
        } else if self.peek() == Some(&Tok::Punct('[')) {
            sel.tags = self.tag_list()?;
        } else {
            return Err(self.err("expected selector"));
        }
        Ok(sel)
    }

    fn target(&mut self) -> Result<Target, ParseError> {
        if self.eat_keyword("wall") {
            Ok(Target::Wall)
        } else {
            Ok(Target::Objects(self.selector()?))
        }
    }

    /// Checks that `kind` and `target` agree on whether the parent is a wall.
    fn check_pairing(&self, kind: RelationKind, target: &Target, at: usize) -> Result<(), ParseError> {
        let is_wall = matches!(target, Target::Wall);
        if kind.targets_wall() != is_wall {
            let msg = if is_wall {
                format!("{kind} cannot target a wall")
            } else {
                format!("{kind} requires 'wall' as its parent")
            };
            return Err(self.err_at(at, msg));
        }
        Ok(())
    }
}

impl SemanticSelector {
    fn default_empty() -> Self {
        SemanticSelector { category: None, tags: BTreeSet::new(), related_to: None }
    }
}

/// Parses DSL text against `catalog`'s vocabulary.
pub fn parse_program(text: &str, catalog: &AssetCatalog) -> Result<ConstraintProgram, ParseError> {
    let mut program = ConstraintProgram::default();
    let mut seen_room = false;
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let toks = tokenize(raw, line_no)?;
        if toks.is_empty() {
            continue;
        }
        let end_column = raw.chars().count() + 1;
        let mut l = Line { toks, pos: 0, line: line_no, end_column, catalog };
        let head = l.ident()?;
        match head.as_str() {
            "room" => {
                if seen_room {
                    return Err(l.err_at(0, "duplicate room spec"));
                }
                seen_room = true;
                l.keyword("polygon")?;
                let mut poly = Vec::new();
                while l.peek() == Some(&Tok::Punct('(')) {
                    poly.push(l.point()?);
                }
                l.keyword("height")?;
                let h = l.number()?;
                l.keyword("door")?;
                let door = l.point()?;
                program.room_resizable = l.eat_keyword("resizable");
                l.expect_end()?;
                let room = RoomSpec { floor_polygon: poly, wall_height: h, door_position: door };
                room.validate().map_err(|e| l.err_at(0, e.to_string()))?;
                program.room = Some(room);
            }
            "room_scale" => {
                let at = l.pos;
                let s = l.number()?;
                if s <= 0.0 {
                    return Err(l.err_at(at, "room_scale must be positive"));
                }
                l.expect_end()?;
                program.room_scale = s;
            }
            "count" => {
                l.punct('(')?;
                let mut sel = l.selector()?;
                if l.eat_keyword("where") {
                    let at = l.pos;
                    let kind = l.relation_kind()?;
                    let target = l.target()?;
                    l.check_pairing(kind, &target, at)?;
                    sel = sel.with_relation(kind, target);
                }
                l.punct(')')?;
                l.keyword("in")?;
                let at = l.pos;
                let (a, b, _) = l.range()?;
                if a < 0.0 || a.fract() != 0.0 || b.fract() != 0.0 || b > u32::MAX as f64 {
                    return Err(l.err_at(at, "count bounds must be non-negative integers"));
                }
                l.expect_end()?;
                program.counts.push(CountConstraint::new(sel, a as u32, b as u32));
            }
            "relation" => {
                l.punct('(')?;
                let at = l.pos;
                let kind = l.relation_kind()?;
                l.punct(',')?;
                let child = l.selector()?;
                l.punct(',')?;
                let parent = l.target()?;
                l.punct(')')?;
                l.expect_end()?;
                l.check_pairing(kind, &parent, at)?;
                program.relations.push(RelationConstraint { kind, child, parent });
            }
            "score" => {
                l.punct('(')?;
                let at = l.pos;
                let name = l.ident()?;
                let objective = Objective::parse(&name).ok_or_else(|| l.err_at(at, format!("unknown objective '{name}'")))?;
                let mut operands = Vec::new();
                loop {
                    l.punct(',')?;
                    if l.eat_keyword("weight") {
                        break;
                    }
                    operands.push(l.target()?);
                }
                if operands.len() != objective.arity() {
                    return Err(l.err_at(at, format!("{name} takes {} operand(s)", objective.arity())));
                }
                if objective != Objective::MaximizeDistance
                    && objective != Objective::MinimizeDistance
                    && operands.iter().any(|o| matches!(o, Target::Wall))
                {
                    return Err(l.err_at(at, format!("{name} needs an object operand")));
                }
                if matches!(operands[0], Target::Wall) {
                    return Err(l.err_at(at, "first operand must select objects"));
                }
                l.punct('=')?;
                let wat = l.pos;
                let w = l.number()?;
                if w < 0.0 {
                    return Err(l.err_at(wat, "weight must be non-negative"));
                }
                l.punct(')')?;
                l.expect_end()?;
                program.scores.push(ScoreTerm { objective, operands, weight: w });
            }
            "occupancy" => {
                l.keyword("in")?;
                let (a, b, at) = l.range()?;
                if a < 0.0 || b > 1.0 {
                    return Err(l.err_at(at, "occupancy bounds must lie in [0,1]"));
                }
                l.expect_end()?;
                program.target_occupancy = Some((a, b));
            }
            "asset" => {
                let at = l.pos;
                let cat = l.ident()?;
                if !catalog.has_category(&cat) {
                    return Err(l.err_at(at, format!("unknown category '{cat}'")));
                }
                let ov = program.asset_overrides.entry(cat).or_default();
                let mut any = false;
                while !l.at_end() {
                    let axis_at = l.pos;
                    let axis = match l.ident()?.as_str() {
                        "x" => 0,
                        "y" => 1,
                        "z" => 2,
                        other => return Err(l.err_at(axis_at, format!("unknown axis '{other}'"))),
                    };
                    let (a, b, rat) = l.range()?;
                    if a <= 0.0 {
                        return Err(l.err_at(rat, "dimensions must be positive"));
                    }
                    ov.set_axis(axis, DimRange::new(a, b));
                    any = true;
                }
                if !any {
                    return Err(l.err("expected axis override"));
                }
            }
            "hint" => {
                let at = l.pos;
                let name = l.ident()?;
                if name != "delete_bias" {
                    return Err(l.err_at(at, format!("unknown hint '{name}'")));
                }
                let vat = l.pos;
                let v = l.number()?;
                if v <= 0.0 {
                    return Err(l.err_at(vat, "delete_bias must be positive"));
                }
                l.expect_end()?;
                program.delete_bias = v;
            }
            _ => return Err(l.err_at(0, format!("unknown statement '{head}'"))),
        }
    }
    Ok(program)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat() -> AssetCatalog {
        AssetCatalog::builtin()
    }

    #[test]
    fn scoped_count() {
        let p = parse_program("count(chair where front_against dining_table) in [3,6]", &cat()).unwrap();
        let c = &p.counts[0];
        assert_eq!((c.low, c.high), (3, 6));
        assert_eq!(c.scope, Some(SemanticSelector::category("dining_table")));
    }

    #[test]
    fn equality_count() {
        let p = parse_program("count(mirror) in [1,1]", &cat()).unwrap();
        assert_eq!((p.counts[0].low, p.counts[0].high), (1, 1));
        assert!(p.counts[0].scope.is_none());
    }

    #[test]
    fn empty_input() {
        let p = parse_program("", &cat()).unwrap();
        assert_eq!(p.constraint_count(), 0);
        assert!(p.scores.is_empty());
        let p = parse_program("# only a comment\n\n", &cat()).unwrap();
        assert_eq!(p, ConstraintProgram::default());
    }

    #[test]
    fn inverted_range_points_at_range() {
        let e = parse_program("count(chair) in [6,3]", &cat()).unwrap_err();
        assert_eq!((e.line, e.column, e.token.as_str()), (1, 17, "["));
    }

    #[test]
    fn unknown_names() {
        let e = parse_program("\ncount(throne) in [1,1]", &cat()).unwrap_err();
        assert_eq!((e.line, e.column, e.token.as_str()), (2, 7, "throne"));
        let e = parse_program("relation(levitates_over, cup, desk)", &cat()).unwrap_err();
        assert_eq!(e.token, "levitates_over");
        let e = parse_program("count([Edible]) in [1,1]", &cat()).unwrap_err();
        assert_eq!(e.token, "Edible");
    }

    #[test]
    fn duplicate_room() {
        let src = "room polygon (0,0) (4,0) (4,3) (0,3) height 2.5 door (2,0)\nroom polygon (0,0) (4,0) (4,3) (0,3) height 2.5 door (2,0)";
        let e = parse_program(src, &cat()).unwrap_err();
        assert_eq!((e.line, e.column, e.token.as_str()), (2, 1, "room"));
    }

    #[test]
    fn wall_pairing_is_checked() {
        assert!(parse_program("relation(against_wall, wardrobe, wall)", &cat()).is_ok());
        assert!(parse_program("relation(against_wall, wardrobe, bed)", &cat()).is_err());
        assert!(parse_program("relation(on_top_of, cup, wall)", &cat()).is_err());
    }

    #[test]
    fn full_program_round_trips() {
        let src = "\
room polygon (0,0) (6,0) (6,5) (0,5) height 2.8 door (3,0) resizable
room_scale 1.25
count(dining_table) in [1,1]
count(chair[Seating] where front_against dining_table) in [3,6]
count([Storage] where against_wall wall) in [0,2]
relation(on_top_of, cup, dining_table)
relation(flush_wall, mirror, wall)
score(maximize_distance, dining_table, wall, weight=10)
score(minimize_distance, chair, dining_table, weight=0.5)
score(maximize_count, plant, weight=1)
score(wall_angle_alignment, [Storage], weight=2)
occupancy in [0.1,0.5]
asset desk x [0.7,0.9] z [0.7,0.8]
hint delete_bias 1.5
";
        let p = parse_program(src, &cat()).unwrap();
        let text = p.to_dsl();
        assert_eq!(text, src);
        assert_eq!(parse_program(&text, &cat()).unwrap(), p);
        let json = p.to_json();
        assert_eq!(ConstraintProgram::from_json(&json).unwrap(), p);
    }
}
