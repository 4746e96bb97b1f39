//! Write and read the binary token embedding table, and look up the
//! vectors of one sentence.

use propspan::corpus::Article;
use propspan::embeddings::{load_embeddings, sentence_vectors, EmbeddingKey, EmbeddingTable, OovPolicy};
use propspan::segment::segment_article;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let article = Article::new(3, "Stop the invasion.\nNow!");
    let sentences = segment_article(&article);
    let mut table = EmbeddingTable::new(4);
    for s in &sentences {
        for t in &s.tokens {
            let v = [s.index as f32, t.token_index as f32, t.text.len() as f32, 0.5];
            table.insert(EmbeddingKey::new(article.id, s.index as u32, t.token_index as u32), &v)?;
        }
    }

    let path = std::env::temp_dir().join("propspan-example.pemb");
    table.write(&path)?;
    let bytes = std::fs::read(&path)?;
    println!(
        "{} records, {} bytes, magic {:?}",
        table.len(),
        bytes.len(),
        std::str::from_utf8(&bytes[..4])
    );
    let back = load_embeddings(&path)?;
    assert_eq!(back.to_bytes(), bytes);
    print!("{}", back.to_text());

    for s in &sentences {
        let vectors = sentence_vectors(&back, article.id, s, OovPolicy::Error)?;
        println!("sentence {}: {} vectors of dim {}", s.index, vectors.len(), back.dim());
    }
    let empty = EmbeddingTable::new(4);
    match sentence_vectors(&empty, article.id, &sentences[0], OovPolicy::Error) {
        Ok(_) => println!("unexpected hit"),
        Err(e) => println!("strict lookup: {e}"),
    }
    let zeros = sentence_vectors(&empty, article.id, &sentences[0], OovPolicy::Zero)?;
    println!("zero policy: {:?}", zeros[0]);
    std::fs::remove_file(&path).ok();
    Ok(())
}
