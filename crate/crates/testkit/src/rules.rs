//! Interpreter for exported rule text, used to check that the text says what
//! the model does.

#[derive(Debug)]
enum Rule {
    Leaf(u8),
    Test {
        feature: String,
        threshold: f64,
        then: Box<Rule>,
        otherwise: Box<Rule>,
    },
}

pub struct RuleProgram {
    root: Rule,
    feature_names: Vec<String>,
}

fn parse_node(lines: &[&str], pos: &mut usize, depth: usize, prefix: &str) -> Result<Rule, String> {
    let line = lines.get(*pos).ok_or("unexpected end of rules")?;
    *pos += 1;
    let indent = "  ".repeat(depth);
    let body = line
        .strip_prefix(&indent)
        .and_then(|l| l.strip_prefix(prefix))
        .ok_or_else(|| format!("bad indentation or prefix in {line:?}"))?;
    if let Some(rest) = body.strip_prefix("predict ") {
        let class = rest.split_whitespace().next().ok_or("missing class")?;
        return match class {
            "0" => Ok(Rule::Leaf(0)),
            "1" => Ok(Rule::Leaf(1)),
            other => Err(format!("bad class {other}")),
        };
    }
    let cond = body
        .strip_prefix("if ")
        .ok_or_else(|| format!("expected if/predict in {line:?}"))?;
    let (feature, threshold) = cond.split_once(" <= ").ok_or("missing <=")?;
    let threshold: f64 = threshold.parse().map_err(|e| format!("bad threshold: {e}"))?;
    let then = parse_node(lines, pos, depth + 1, "then ")?;
    let otherwise = parse_node(lines, pos, depth + 1, "else ")?;
    Ok(Rule::Test {
        feature: feature.to_string(),
        threshold,
        then: Box::new(then),
        otherwise: Box::new(otherwise),
    })
}

impl RuleProgram {
    pub fn parse(text: &str, feature_names: &[String]) -> Result<Self, String> {
        let lines: Vec<&str> = text.lines().collect();
        let mut pos = 0;
        let root = parse_node(&lines, &mut pos, 0, "")?;
        if pos != lines.len() {
            return Err("trailing lines".into());
        }
        Ok(RuleProgram {
            root,
            feature_names: feature_names.to_vec(),
        })
    }

    pub fn eval(&self, row: &[f64]) -> u8 {
        let mut node = &self.root;
        loop {
            match node {
                Rule::Leaf(c) => return *c,
                Rule::Test {
                    feature,
                    threshold,
                    then,
                    otherwise,
                } => {
                    let k = self
                        .feature_names
                        .iter()
                        .position(|n| n == feature)
                        .expect("known feature");
                    node = if row[k] <= *threshold { then } else { otherwise };
                }
            }
        }
    }
}
