//! Criteria and assessment files, in the same document dialect as model
//! files: `name = number` statements inside named blocks.
//!
//! ```text
//! criteria {
//!   decision_authority = 3
//!   ports = 4
//! }
//! ```
//!
//! ```text
//! assessments {
//!   approach "Cell-DEVS" {
//!     decision_authority = 0
//!     ports = 1
//!   }
//! }
//! ```

use devsim_core::doc::{tokenize, Cursor, TokenKind};

use crate::{Assessment, Criterion, ScoreError};

fn parse_err(e: impl std::fmt::Display) -> ScoreError {
    ScoreError::Parse(e.to_string())
}

fn expect_number(cursor: &mut Cursor<'_>) -> Result<f64, ScoreError> {
    match cursor.peek().clone() {
        TokenKind::Integer(v) => {
            cursor.bump();
            Ok(v as f64)
        }
        TokenKind::Real(v) => {
            cursor.bump();
            Ok(v)
        }
        other => Err(ScoreError::Parse(format!(
            "at {}: expected a number, found {}",
            cursor.pos(),
            other.describe()
        ))),
    }
}

/// Parses a `criteria { name = weight ... }` file.
pub fn parse_criteria(text: &str) -> Result<Vec<Criterion>, ScoreError> {
    let tokens = tokenize(text).map_err(parse_err)?;
    let mut cursor = Cursor::new(&tokens);
    cursor.skip_seps();
    cursor.expect_keyword("criteria").map_err(parse_err)?;
    cursor.expect(&TokenKind::LBrace).map_err(parse_err)?;
    let mut criteria = Vec::new();
    loop {
        cursor.skip_seps();
        if cursor.eat(&TokenKind::RBrace) {
            break;
        }
        let (name, _) = cursor.expect_ident().map_err(parse_err)?;
        cursor.expect(&TokenKind::Equals).map_err(parse_err)?;
        let weight = expect_number(&mut cursor)?;
        if criteria.iter().any(|c: &Criterion| c.name == name) {
            return Err(ScoreError::DuplicateCriterion(name));
        }
        criteria.push(Criterion::new(name, weight)?);
        cursor.expect_end_of_statement().map_err(parse_err)?;
    }
    cursor.skip_seps();
    if !cursor.at_end() {
        return Err(ScoreError::Parse(format!(
            "at {}: unexpected content after criteria block",
            cursor.pos()
        )));
    }
    Ok(criteria)
}

/// Parses an `assessments { approach <name> { criterion = value ... } ... }`
/// file. Approach names are quoted strings or bare identifiers.
pub fn parse_assessments(text: &str) -> Result<Vec<Assessment>, ScoreError> {
    let tokens = tokenize(text).map_err(parse_err)?;
    let mut cursor = Cursor::new(&tokens);
    cursor.skip_seps();
    cursor.expect_keyword("assessments").map_err(parse_err)?;
    cursor.expect(&TokenKind::LBrace).map_err(parse_err)?;
    let mut assessments: Vec<Assessment> = Vec::new();
    loop {
        cursor.skip_seps();
        if cursor.eat(&TokenKind::RBrace) {
            break;
        }
        cursor.expect_keyword("approach").map_err(parse_err)?;
        let approach = match cursor.peek().clone() {
            TokenKind::Text(name) => {
                cursor.bump();
                name
            }
            TokenKind::Ident(name) => {
                cursor.bump();
                name
            }
            other => {
                return Err(ScoreError::Parse(format!(
                    "at {}: expected an approach name, found {}",
                    cursor.pos(),
                    other.describe()
                )))
            }
        };
        if assessments.iter().any(|a| a.approach == approach) {
            return Err(ScoreError::DuplicateApproach(approach));
        }
        cursor.expect(&TokenKind::LBrace).map_err(parse_err)?;
        let mut values = std::collections::BTreeMap::new();
        loop {
            cursor.skip_seps();
            if cursor.eat(&TokenKind::RBrace) {
                break;
            }
            let (criterion, pos) = cursor.expect_ident().map_err(parse_err)?;
            cursor.expect(&TokenKind::Equals).map_err(parse_err)?;
            let value = expect_number(&mut cursor)?;
            if values.insert(criterion.clone(), value).is_some() {
                return Err(ScoreError::Parse(format!(
                    "at {pos}: duplicate value for criterion `{criterion}`"
                )));
            }
            cursor.expect_end_of_statement().map_err(parse_err)?;
        }
        assessments.push(Assessment { approach, values });
        cursor.expect_end_of_statement().map_err(parse_err)?;
    }
    cursor.skip_seps();
    if !cursor.at_end() {
        return Err(ScoreError::Parse(format!(
            "at {}: unexpected content after assessments block",
            cursor.pos()
        )));
    }
    Ok(assessments)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_criteria_file() {
        let text = "\
criteria {
  decision_authority = 3
  structure_information = 3
  ports = 4
  port_modification = 1
}
";
        let criteria = parse_criteria(text).unwrap();
        assert_eq!(criteria.len(), 4);
        assert_eq!(criteria[2].name, "ports");
        assert_eq!(criteria[2].weight, 4.0);
        assert_eq!(criteria, crate::paper_preset());
    }

    #[test]
    fn parses_assessments_file() {
        let text = "\
assessments {
  approach \"Cell-DEVS\" {
    decision_authority = 0
    ports = 1
  }
  approach DSDEVS { decision_authority = 1; ports = 0 }
}
";
        let assessments = parse_assessments(text).unwrap();
        assert_eq!(assessments.len(), 2);
        assert_eq!(assessments[0].approach, "Cell-DEVS");
        assert_eq!(assessments[0].values["ports"], 1.0);
        assert_eq!(assessments[1].approach, "DSDEVS");
    }

    #[test]
    fn rejects_bad_weight_and_duplicates() {
        assert!(matches!(
            parse_criteria("criteria { a = 0 }"),
            Err(ScoreError::BadWeight { .. })
        ));
        assert!(matches!(
            parse_criteria("criteria { a = 1\n a = 2 }"),
            Err(ScoreError::DuplicateCriterion(_))
        ));
        assert!(matches!(
            parse_assessments("assessments { approach x { a = 1 }\n approach x { a = 1 } }"),
            Err(ScoreError::DuplicateApproach(_))
        ));
    }
}
