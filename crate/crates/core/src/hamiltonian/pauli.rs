use crate::error::{Error, Result};
use crate::linalg::{kron, CMat, C64, I, ONE, ZERO};

const MAX_QUBITS: usize = 12;

fn single(c: char) -> Option<CMat> {
    let m = match c {
        'I' => [ONE, ZERO, ZERO, ONE],
        'X' => [ZERO, ONE, ONE, ZERO],
        'Y' => [ZERO, -I, I, ZERO],
        'Z' => [ONE, ZERO, ZERO, -ONE],
        _ => return None,
    };
    Some(CMat::from_row_slice(2, 2, &m))
}

/// Dense matrix of a Pauli string; the leftmost letter is the most
/// significant tensor factor.
pub fn pauli_matrix(s: &str) -> Result<CMat> {
    let s = s.trim();
    if s.is_empty() || s.chars().count() > MAX_QUBITS {
        return Err(Error::Parse(format!(
            "pauli string {s:?} must have 1..={MAX_QUBITS} letters"
        )));
    }
    let mut acc = CMat::from_element(1, 1, C64::new(1.0, 0.0));
    for c in s.chars() {
        let p = single(c.to_ascii_uppercase())
            .ok_or_else(|| Error::Parse(format!("invalid pauli letter {c:?} in {s:?}")))?;
        acc = kron(&acc, &p);
    }
    Ok(acc)
}
