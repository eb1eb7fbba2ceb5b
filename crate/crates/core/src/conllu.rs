//! CoNLL-U ingestion into validated dependency trees.
//!
//! Only the columns needed for reordering are kept (ID, FORM, UPOS, HEAD,
//! DEPREL). Multiword-token ranges (`3-4`) and empty nodes (`5.1`) are
//! skipped.

use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use thiserror::Error;

use crate::corpus::Sentence;

#[derive(Debug, Error)]
pub enum ConlluError {
    #[error("malformed CoNLL-U at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("sentence {sentence_id} does not form a tree (cycle in head links)")]
    CyclicTree { sentence_id: String },
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

/// One syntactic word. `head` is 0 for the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub index: usize,
    pub form: String,
    pub upos: String,
    pub head: usize,
    pub deprel: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependencyTree {
    nodes: Vec<Node>,
    root: usize,
    children: Vec<Vec<usize>>,
    /// Comment lines preceding the sentence, without the leading `#`.
    pub metadata: Vec<String>,
}

impl DependencyTree {
    /// Validates `nodes` (1-based contiguous indices, a single root, acyclic
    /// head links) and builds the tree.
    pub fn new(nodes: Vec<Node>, metadata: Vec<String>) -> Result<Self, ConlluError> {
        Self::build(nodes, metadata, 0)
    }

    fn build(nodes: Vec<Node>, metadata: Vec<String>, line: usize) -> Result<Self, ConlluError> {
        let malformed = |reason: String| ConlluError::Malformed { line, reason };
        let n = nodes.len();
        if n == 0 {
            return Err(malformed("sentence has no words".into()));
        }
        let mut root = None;
        let mut children = vec![Vec::new(); n + 1];
        for (pos, node) in nodes.iter().enumerate() {
            if node.index != pos + 1 {
                return Err(malformed(format!(
                    "word indices must be contiguous from 1; found {} at position {}",
                    node.index,
                    pos + 1
                )));
            }
            if node.head > n {
                return Err(malformed(format!(
                    "head {} of word {} is out of range",
                    node.head, node.index
                )));
            }
            if node.head == 0 {
                if root.replace(node.index).is_some() {
                    return Err(malformed("more than one root".into()));
                }
            } else {
                children[node.head].push(node.index);
            }
        }
        let Some(root) = root else {
            return Err(malformed("no root word".into()));
        };
        let tree = DependencyTree {
            nodes,
            root,
            children,
            metadata,
        };
        // Every word must reach the root by following heads.
        let mut reached = vec![false; n + 1];
        let mut stack = vec![root];
        let mut count = 0;
        while let Some(i) = stack.pop() {
            if reached[i] {
                continue;
            }
            reached[i] = true;
            count += 1;
            stack.extend(tree.children[i].iter().copied());
        }
        if count != n {
            return Err(ConlluError::CyclicTree {
                sentence_id: tree.sentence_id().unwrap_or("?").to_owned(),
            });
        }
        Ok(tree)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Node with 1-based index `i`.
    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i - 1]
    }

    /// Dependents of word `i` (0 is the artificial root), in surface order.
    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn sentence_id(&self) -> Option<&str> {
        sent_id(&self.metadata)
    }

    pub fn sentence(&self) -> Sentence {
        Sentence::new(self.nodes.iter().map(|n| n.form.as_str()))
    }

    /// True if no arc crosses another, i.e. every word between a head and
    /// its dependent is dominated by that head.
    pub fn is_projective(&self) -> bool {
        self.nodes.iter().filter(|n| n.head != 0).all(|n| {
            let (lo, hi) = if n.head < n.index {
                (n.head, n.index)
            } else {
                (n.index, n.head)
            };
            (lo + 1..hi).all(|k| self.dominates(n.head, k))
        })
    }

    fn dominates(&self, ancestor: usize, mut k: usize) -> bool {
        while k != 0 {
            if k == ancestor {
                return true;
            }
            k = self.node(k).head;
        }
        false
    }
}

fn sent_id(metadata: &[String]) -> Option<&str> {
    metadata.iter().find_map(|m| {
        m.trim()
            .strip_prefix("sent_id")
            .and_then(|rest| rest.trim_start().strip_prefix('='))
            .map(str::trim)
    })
}

/// Parses every sentence block in `reader`.
pub fn parse_conllu<R: BufRead>(reader: R) -> Result<Vec<DependencyTree>, ConlluError> {
    let mut trees = Vec::new();
    let mut nodes = Vec::new();
    let mut metadata = Vec::new();
    let mut block_start = 1;

    let finish = |nodes: &mut Vec<Node>, metadata: &mut Vec<String>, trees: &mut Vec<DependencyTree>, start: usize| {
        if nodes.is_empty() {
            metadata.clear();
            return Ok(());
        }
        let mut meta = std::mem::take(metadata);
        if sent_id(&meta).is_none() {
            meta.push(format!(" sent_id = {}", trees.len() + 1));
        }
        let tree = DependencyTree::build(std::mem::take(nodes), meta, start)?;
        trees.push(tree);
        Ok::<(), ConlluError>(())
    };

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            finish(&mut nodes, &mut metadata, &mut trees, block_start)?;
            block_start = line_no + 1;
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if nodes.is_empty() {
                metadata.push(comment.to_owned());
            }
            continue;
        }
        let malformed = |reason: String| ConlluError::Malformed {
            line: line_no,
            reason,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 10 {
            return Err(malformed(format!("expected 10 columns, found {}", fields.len())));
        }
        let id = fields[0];
        if id.contains('-') || id.contains('.') {
            continue;
        }
        let index = id
            .parse::<usize>()
            .map_err(|_| malformed(format!("invalid word index {id:?}")))?;
        let head = fields[6]
            .parse::<usize>()
            .map_err(|_| malformed(format!("invalid head {:?}", fields[6])))?;
        if head == index {
            let sentence_id = sent_id(&metadata)
                .map(str::to_owned)
                .unwrap_or_else(|| (trees.len() + 1).to_string());
            return Err(ConlluError::CyclicTree { sentence_id });
        }
        if fields[1].is_empty() || fields[1].chars().any(char::is_whitespace) {
            return Err(malformed(format!("form {:?} is empty or contains whitespace", fields[1])));
        }
        nodes.push(Node {
            index,
            form: fields[1].to_owned(),
            upos: fields[3].to_owned(),
            head,
            deprel: fields[7].to_owned(),
        });
    }
    finish(&mut nodes, &mut metadata, &mut trees, block_start)?;
    Ok(trees)
}

pub fn parse_conllu_file(path: impl AsRef<Path>) -> Result<Vec<DependencyTree>, ConlluError> {
    parse_conllu(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(i: usize, form: &str, upos: &str, head: usize, rel: &str) -> String {
        format!("{i}\t{form}\t_\t{upos}\t_\t_\t{head}\t{rel}\t_\t_")
    }

    #[test]
    fn minimal_tree() {
        let text = format!("{}\n{}\n", row(1, "Sara", "PROPN", 2, "nsubj"), row(2, "ate", "VERB", 0, "root"));
        let trees = parse_conllu(text.as_bytes()).unwrap();
        assert_eq!(trees.len(), 1);
        assert_eq!(trees[0].root(), 2);
        assert_eq!(trees[0].children(2), [1]);
        assert_eq!(trees[0].sentence().to_string(), "Sara ate");
    }

    #[test]
    fn self_headed_word_is_a_cycle() {
        let text = format!("# sent_id = s9\n{}\n{}\n", row(1, "a", "X", 1, "dep"), row(2, "b", "X", 0, "root"));
        match parse_conllu(text.as_bytes()) {
            Err(ConlluError::CyclicTree { sentence_id }) => assert_eq!(sentence_id, "s9"),
            other => panic!("expected cycle, got {other:?}"),
        }
    }

    #[test]
    fn longer_cycle_is_detected() {
        let text = [
            row(1, "a", "X", 2, "dep"),
            row(2, "b", "X", 1, "dep"),
            row(3, "c", "X", 0, "root"),
        ]
        .join("\n");
        assert!(matches!(parse_conllu(text.as_bytes()), Err(ConlluError::CyclicTree { .. })));
    }

    #[test]
    fn ranges_and_empty_nodes_are_skipped_and_comments_kept() {
        let text = [
            "# sent_id = fr-1".to_owned(),
            "# text = du pain".to_owned(),
            "1-2\tdu\t_\t_\t_\t_\t_\t_\t_\t_".to_owned(),
            row(1, "de", "ADP", 3, "case"),
            row(2, "le", "DET", 3, "det"),
            "2.1\tx\t_\tX\t_\t_\t_\t_\t_\t_".to_owned(),
            row(3, "pain", "NOUN", 0, "root"),
            String::new(),
        ]
        .join("\n");
        let trees = parse_conllu(text.as_bytes()).unwrap();
        assert_eq!(trees[0].len(), 3);
        assert_eq!(trees[0].sentence_id(), Some("fr-1"));
        assert_eq!(trees[0].metadata.len(), 2);
    }

    #[test]
    fn structural_errors() {
        let two_roots = format!("{}\n{}\n", row(1, "a", "X", 0, "root"), row(2, "b", "X", 0, "root"));
        assert!(matches!(parse_conllu(two_roots.as_bytes()), Err(ConlluError::Malformed { line: 1, .. })));
        let gap = format!("{}\n{}\n", row(1, "a", "X", 0, "root"), row(3, "b", "X", 1, "dep"));
        assert!(matches!(parse_conllu(gap.as_bytes()), Err(ConlluError::Malformed { .. })));
        let short = "1\ta\t_\n";
        assert!(matches!(parse_conllu(short.as_bytes()), Err(ConlluError::Malformed { line: 1, .. })));
        let bad_head = "1\ta\t_\tX\t_\t_\tz\troot\t_\t_\n";
        assert!(matches!(parse_conllu(bad_head.as_bytes()), Err(ConlluError::Malformed { line: 1, .. })));
    }

    #[test]
    fn projectivity() {
        // 1 <- 3, 2 <- 4, 3 <- 4 root: arc 3->1 spans 2, which 3 does not dominate.
        let nodes = vec![
            Node { index: 1, form: "a".into(), upos: "X".into(), head: 3, deprel: "dep".into() },
            Node { index: 2, form: "b".into(), upos: "X".into(), head: 4, deprel: "dep".into() },
            Node { index: 3, form: "c".into(), upos: "X".into(), head: 4, deprel: "dep".into() },
            Node { index: 4, form: "d".into(), upos: "X".into(), head: 0, deprel: "root".into() },
        ];
        let tree = DependencyTree::new(nodes, vec![]).unwrap();
        assert!(!tree.is_projective());
    }
}
