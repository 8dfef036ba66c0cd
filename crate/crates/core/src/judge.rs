//! Final-answer correctness: a deterministic exact-match judge (with numeric
//! tolerance), an optional remote chat-endpoint judge, and the inter-rater
//! agreement statistics used to audit judges.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// System prompt sent verbatim by the remote semantic judge.
pub const JUDGE_SYSTEM_PROMPT: &str = include_str!("../assets/judge_prompt.txt");

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error("agreement counts are empty")]
    EmptyCounts,
    #[error("expected agreement is 1; kappa is undefined")]
    KappaUndefined,
    #[error("remote judge failed after {attempts} attempt(s): {detail}")]
    Remote { attempts: u32, detail: String },
    #[error("remote judge returned an unusable verdict: {0}")]
    RemoteParse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JudgeBackendKind {
    Exact,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub is_same_meaning: bool,
    pub reason: String,
    pub backend: JudgeBackendKind,
}

/// Answer-equivalence backend. Implementations must be deterministic per
/// (reference, candidate) pair or fail loudly; a verdict is never silent.
pub trait Judge: Send + Sync {
    fn judge(
        &self,
        question: Option<&str>,
        reference: &str,
        candidate: &str,
    ) -> Result<JudgeVerdict, JudgeError>;
}

// ---------------------------------------------------------------------
// exact backend

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Word(String),
    Number(f64),
}

/// Case, whitespace, and punctuation insensitive token stream; numeric
/// substrings parse as numbers so "4" and "4.0" agree.
fn tokenize(text: &str) -> Vec<Token> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_digit()
            || (matches!(c, '.' | '-' | '+')
                && bytes.get(i + 1).map_or(false, |b| b.is_ascii_digit())
                && !prev_is_alnum(bytes, i))
        {
            let start = i;
            if matches!(c, '-' | '+') {
                i += 1;
            }
            let mut seen_dot = false;
            while i < bytes.len() {
                let b = bytes[i] as char;
                if b.is_ascii_digit() {
                    i += 1;
                } else if b == '.' && !seen_dot {
                    seen_dot = true;
                    i += 1;
                } else {
                    break;
                }
            }
            let slice = &text[start..i];
            match slice.parse::<f64>() {
                Ok(v) if v.is_finite() => tokens.push(Token::Number(v)),
                _ => tokens.push(Token::Word(slice.to_ascii_lowercase())),
            }
        } else if c.is_alphanumeric() {
            let start = i;
            while i < bytes.len() && (bytes[i] as char).is_alphanumeric() {
                i += 1;
            }
            tokens.push(Token::Word(text[start..i].to_ascii_lowercase()));
        } else {
            i += 1;
        }
    }
    tokens
}

fn prev_is_alnum(bytes: &[u8], i: usize) -> bool {
    i > 0 && (bytes[i - 1] as char).is_alphanumeric()
}

fn numbers_close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-6 * a.abs().max(b.abs())
}

/// Normalized string equality plus numeric-token equality within a relative
/// 1e-6. Symmetric in its two arguments.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactJudge;

impl Judge for ExactJudge {
    fn judge(
        &self,
        _question: Option<&str>,
        reference: &str,
        candidate: &str,
    ) -> Result<JudgeVerdict, JudgeError> {
        let a = tokenize(reference);
        let b = tokenize(candidate);
        let is_same_meaning = a.len() == b.len()
            && a.iter().zip(&b).all(|(x, y)| match (x, y) {
                (Token::Word(w), Token::Word(v)) => w == v,
                (Token::Number(m), Token::Number(n)) => numbers_close(*m, *n),
                _ => false,
            });
        Ok(JudgeVerdict {
            is_same_meaning,
            reason: if is_same_meaning {
                "normalized token streams match".to_string()
            } else {
                "normalized token streams differ".to_string()
            },
            backend: JudgeBackendKind::Exact,
        })
    }
}

// ---------------------------------------------------------------------
// remote backend

/// Chat-completion endpoint configuration. Every field can be overridden by
/// environment variables (`EOENV_JUDGE_URL`, `EOENV_JUDGE_MODEL`,
/// `EOENV_JUDGE_TEMPERATURE`, `EOENV_JUDGE_API_KEY`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemoteJudgeConfig {
    /// Full chat-completions URL, e.g. `https://host/v1/chat/completions`.
    pub url: String,
    pub model: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key: Option<String>,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_retries() -> u32 {
    2
}

fn default_timeout() -> u64 {
    60
}

impl RemoteJudgeConfig {
    pub fn apply_env(mut self) -> Self {
        if let Ok(v) = std::env::var("EOENV_JUDGE_URL") {
            self.url = v;
        }
        if let Ok(v) = std::env::var("EOENV_JUDGE_MODEL") {
            self.model = v;
        }
        if let Ok(v) = std::env::var("EOENV_JUDGE_TEMPERATURE") {
            if let Ok(t) = v.parse() {
                self.temperature = t;
            }
        }
        if let Ok(v) = std::env::var("EOENV_JUDGE_API_KEY") {
            self.api_key = Some(v);
        }
        self
    }
}

/// Minimal blocking chat-completions client with bounded retries. Exposed so
/// other optional remote backends (semantic filters, scene describers) reuse
/// the same transport.
#[derive(Debug)]
pub struct ChatClient {
    config: RemoteJudgeConfig,
    client: reqwest::blocking::Client,
}

impl ChatClient {
    pub fn new(config: RemoteJudgeConfig) -> Self {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(config.timeout_secs))
            .build()
            .expect("client builds");
        Self { config, client }
    }

    /// Sends `(system, user)` messages and returns the assistant text.
    /// Transport failures and non-2xx responses are retried with backoff up
    /// to `max_retries`, then reported; there is no silent fallback.
    pub fn complete(&self, system: &str, user: &str) -> Result<String, JudgeError> {
        let body = serde_json::json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        });
        let attempts = self.config.max_retries + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(std::time::Duration::from_millis(50 << attempt));
            }
            let mut request = self.client.post(&self.config.url).json(&body);
            if let Some(key) = &self.config.api_key {
                request = request.bearer_auth(key);
            }
            match request.send() {
                Err(e) => last = e.to_string(),
                Ok(response) if !response.status().is_success() => {
                    last = format!("status {}", response.status());
                }
                Ok(response) => match response.json::<serde_json::Value>() {
                    Err(e) => last = format!("invalid body: {e}"),
                    Ok(value) => match value["choices"][0]["message"]["content"].as_str() {
                        Some(content) => return Ok(content.to_string()),
                        None => last = "response carries no message content".to_string(),
                    },
                },
            }
        }
        Err(JudgeError::Remote {
            attempts,
            detail: last,
        })
    }
}

/// Remote semantic judge: sends the shipped system prompt verbatim and a
/// fixed three-field user message, then parses the JSON verdict.
#[derive(Debug)]
pub struct RemoteJudge {
    client: ChatClient,
}

impl RemoteJudge {
    pub fn new(config: RemoteJudgeConfig) -> Self {
        Self {
            client: ChatClient::new(config),
        }
    }

    fn user_message(question: Option<&str>, reference: &str, candidate: &str) -> String {
        format!(
            "QUESTION:\n{}\n\nREFERENCE:\n{}\n\nCANDIDATE:\n{}",
            question.unwrap_or("(not provided)"),
            reference,
            candidate
        )
    }
}

#[derive(Deserialize)]
struct RawVerdict {
    is_same_meaning: bool,
    #[serde(default)]
    reason: String,
}

fn parse_verdict(content: &str) -> Result<JudgeVerdict, JudgeError> {
    let trimmed = content
        .trim()
        .trim_start_matches("```json")
        .trim_start_matches("```")
        .trim_end_matches("```")
        .trim();
    let raw: RawVerdict = serde_json::from_str(trimmed)
        .map_err(|e| JudgeError::RemoteParse(format!("{e}: {trimmed}")))?;
    if raw.reason.trim().is_empty() {
        return Err(JudgeError::RemoteParse(
            "verdict is missing a reason".to_string(),
        ));
    }
    Ok(JudgeVerdict {
        is_same_meaning: raw.is_same_meaning,
        reason: raw.reason,
        backend: JudgeBackendKind::Remote,
    })
}

impl Judge for RemoteJudge {
    fn judge(
        &self,
        question: Option<&str>,
        reference: &str,
        candidate: &str,
    ) -> Result<JudgeVerdict, JudgeError> {
        let user = Self::user_message(question, reference, candidate);
        let content = self.client.complete(JUDGE_SYSTEM_PROMPT, &user)?;
        parse_verdict(&content)
    }
}

// ---------------------------------------------------------------------
// agreement statistics

/// Pairwise binary-rater confusion counts: `yy` both yes, `yn` A yes B no,
/// `ny` A no B yes, `nn` both no.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementCounts {
    pub yy: u64,
    pub yn: u64,
    pub ny: u64,
    pub nn: u64,
}

impl AgreementCounts {
    pub fn total(&self) -> u64 {
        self.yy + self.yn + self.ny + self.nn
    }
}

/// Fraction of items both raters labeled identically.
pub fn observed_agreement(counts: AgreementCounts) -> Result<f64, JudgeError> {
    let n = counts.total();
    if n == 0 {
        return Err(JudgeError::EmptyCounts);
    }
    Ok((counts.yy + counts.nn) as f64 / n as f64)
}

/// Chance-corrected agreement `(p_o - p_e) / (1 - p_e)` with the expected
/// agreement from the marginal products.
pub fn cohens_kappa(counts: AgreementCounts) -> Result<f64, JudgeError> {
    let n = counts.total();
    if n == 0 {
        return Err(JudgeError::EmptyCounts);
    }
    let n = n as f64;
    let p_o = (counts.yy + counts.nn) as f64 / n;
    let a_yes = (counts.yy + counts.yn) as f64;
    let b_yes = (counts.yy + counts.ny) as f64;
    let p_e = (a_yes * b_yes + (n - a_yes) * (n - b_yes)) / (n * n);
    if (1.0 - p_e).abs() < 1e-15 {
        return Err(JudgeError::KappaUndefined);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};

    fn exact(reference: &str, candidate: &str) -> bool {
        ExactJudge
            .judge(None, reference, candidate)
            .unwrap()
            .is_same_meaning
    }

    #[test]
    fn identical_and_normalized_strings_agree() {
        assert!(exact("increased", "increased"));
        assert!(exact("No-Damage", "no damage"));
        assert!(exact("  3  ships ", "3 ships"));
        // plural folding is the semantic filter's job, not the judge's
        assert!(!exact("3 ships", "3 ship"));
        assert!(exact("", ""));
    }

    #[test]
    fn numeric_tokens_compare_with_tolerance() {
        assert!(exact("4", "4.0"));
        assert!(exact("0.50", ".5"));
        assert!(exact("ratio 0.3333333", "ratio 0.33333329"));
        assert!(!exact("4", "5"));
        assert!(!exact("4", "four"));
        assert!(exact("-2", "-2.0"));
    }

    #[test]
    fn different_claims_disagree() {
        assert!(!exact(
            "no-damage",
            "the most frequently observed damage category is minor damage"
        ));
    }

    #[test]
    fn self_judgement_true_for_odd_strings() {
        for s in ["nan", "inf", "4.", "a-b--c", "3 ... 7"] {
            assert!(exact(s, s), "{s}");
        }
    }

    #[test]
    fn agreement_and_kappa_of_the_audit_rows() {
        // near-balanced disagreement row
        let counts = AgreementCounts {
            yy: 263,
            yn: 20,
            ny: 26,
            nn: 291,
        };
        let agreement = observed_agreement(counts).unwrap();
        let kappa = cohens_kappa(counts).unwrap();
        assert!((agreement - 0.9233).abs() < 5e-4, "{agreement}");
        assert!((kappa - 0.8463).abs() < 5e-4, "{kappa}");

        // strongly conservative rater
        let counts = AgreementCounts {
            yy: 149,
            yn: 134,
            ny: 1,
            nn: 316,
        };
        assert!((observed_agreement(counts).unwrap() - 0.775).abs() < 1e-9);
        assert!((cohens_kappa(counts).unwrap() - 0.537).abs() < 2e-3);
    }

    #[test]
    fn kappa_boundaries() {
        let perfect = AgreementCounts {
            yy: 10,
            yn: 0,
            ny: 0,
            nn: 10,
        };
        assert_eq!(observed_agreement(perfect).unwrap(), 1.0);
        assert_eq!(cohens_kappa(perfect).unwrap(), 1.0);
        let empty = AgreementCounts {
            yy: 0,
            yn: 0,
            ny: 0,
            nn: 0,
        };
        assert!(matches!(
            observed_agreement(empty),
            Err(JudgeError::EmptyCounts)
        ));
        let degenerate = AgreementCounts {
            yy: 10,
            yn: 0,
            ny: 0,
            nn: 0,
        };
        assert!(matches!(
            cohens_kappa(degenerate),
            Err(JudgeError::KappaUndefined)
        ));
    }

    #[test]
    fn kappa_never_exceeds_agreement() {
        for (yy, yn, ny, nn) in [(5, 3, 2, 9), (50, 1, 7, 20), (9, 9, 9, 9), (1, 2, 3, 4)] {
            let counts = AgreementCounts { yy, yn, ny, nn };
            let agreement = observed_agreement(counts).unwrap();
            let kappa = cohens_kappa(counts).unwrap();
            assert!(kappa <= agreement + 1e-12, "{counts:?}");
        }
    }

    /// Sequential canned-response HTTP server for loopback client tests.
    fn serve_responses(responses: Vec<String>) -> String {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            for response in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut buf = [0u8; 4096];
                let mut seen = Vec::new();
                loop {
                    match stream.read(&mut buf) {
                        Ok(0) => break,
                        Ok(n) => {
                            seen.extend_from_slice(&buf[..n]);
                            if let Some(pos) = find_header_end(&seen) {
                                let headers = String::from_utf8_lossy(&seen[..pos]);
                                let length = headers
                                    .lines()
                                    .find_map(|l| {
                                        l.to_ascii_lowercase()
                                            .strip_prefix("content-length:")
                                            .map(|v| v.trim().parse::<usize>().unwrap_or(0))
                                    })
                                    .unwrap_or(0);
                                if seen.len() >= pos + 4 + length {
                                    break;
                                }
                            }
                        }
                        Err(_) => break,
                    }
                }
                stream.write_all(response.as_bytes()).unwrap();
            }
        });
        format!("http://{addr}/v1/chat/completions")
    }

    fn find_header_end(bytes: &[u8]) -> Option<usize> {
        bytes.windows(4).position(|w| w == b"\r\n\r\n")
    }

    fn http_ok(body: &str) -> String {
        format!(
            "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
            body.len(),
            body
        )
    }

    fn chat_body(content: &str) -> String {
        serde_json::json!({
            "choices": [{"message": {"role": "assistant", "content": content}}]
        })
        .to_string()
    }

    #[test]
    fn remote_judge_parses_verdicts_and_retries() {
        let verdict = r#"{"is_same_meaning": true, "reason": "same count"}"#;
        let url = serve_responses(vec![
            "HTTP/1.1 500 Internal Server Error\r\nContent-Length: 0\r\nConnection: close\r\n\r\n"
                .to_string(),
            http_ok(&chat_body(verdict)),
        ]);
        let judge = RemoteJudge::new(RemoteJudgeConfig {
            url,
            model: "test-model".into(),
            temperature: 0.0,
            api_key: None,
            max_retries: 2,
            timeout_secs: 5,
        });
        let out = judge.judge(Some("how many?"), "3", "three ships").unwrap();
        assert!(out.is_same_meaning);
        assert_eq!(out.backend, JudgeBackendKind::Remote);
        assert_eq!(out.reason, "same count");
    }

    #[test]
    fn remote_judge_rejects_empty_reason_and_reports_failure() {
        let url = serve_responses(vec![http_ok(&chat_body(
            r#"{"is_same_meaning": false, "reason": ""}"#,
        ))]);
        let judge = RemoteJudge::new(RemoteJudgeConfig {
            url,
            model: "test-model".into(),
            temperature: 0.0,
            api_key: None,
            max_retries: 0,
            timeout_secs: 5,
        });
        assert!(matches!(
            judge.judge(None, "a", "b"),
            Err(JudgeError::RemoteParse(_))
        ));

        let unreachable = RemoteJudge::new(RemoteJudgeConfig {
            url: "http://127.0.0.1:1/v1/chat/completions".into(),
            model: "test-model".into(),
            temperature: 0.0,
            api_key: None,
            max_retries: 1,
            timeout_secs: 1,
        });
        assert!(matches!(
            unreachable.judge(None, "a", "b"),
            Err(JudgeError::Remote { attempts: 2, .. })
        ));
    }
}
