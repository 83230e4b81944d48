//! Gallery layouts on an abstract grid of unit cells.

use serde::{Deserialize, Serialize};

use super::{MediaItem, ScoredItem};

pub const DEFAULT_COLUMNS: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GalleryStyle {
    /// Equal tiles, row-major, oldest first.
    StrictOrderEqualSize,
    /// Tile width by score class, greedily packed into rows.
    LooseOrderVaryingSize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tile {
    pub item: MediaItem,
    pub score: f64,
    /// Position in the ranked input, 0-based.
    pub rank: usize,
    pub row: u32,
    pub column: u32,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaGallery {
    pub style: GalleryStyle,
    pub columns: u32,
    pub tiles: Vec<Tile>,
}

impl MediaGallery {
    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    pub fn rows(&self) -> u32 {
        self.tiles.iter().map(|t| t.row + t.height).max().unwrap_or(0)
    }
}

/// Size class 0 (largest) to 2 by score quantile. Tied scores share the
/// class of the best-placed item with that score.
pub fn size_class(ranked: &[ScoredItem], index: usize) -> u8 {
    let n = ranked.len();
    let score = ranked[index].score;
    let pos = ranked.iter().position(|s| s.score == score).unwrap_or(index);
    match (3 * pos) / n.max(1) {
        0 => 0,
        1 => 1,
        _ => 2,
    }
}

fn class_width(class: u8, columns: u32) -> u32 {
    match class {
        0 => columns,
        1 => (columns / 2).max(1),
        _ => 1,
    }
}

/// Plain greedy rows: items in rank order, a new row when the next does
/// not fit. Returns rows of item indices.
pub fn plain_rows(widths: &[u32], columns: u32) -> Vec<Vec<usize>> {
    let mut rows: Vec<Vec<usize>> = Vec::new();
    let mut used = columns;
    for (i, &w) in widths.iter().enumerate() {
        if used + w > columns {
            rows.push(Vec::new());
            used = 0;
        }
        rows.last_mut().expect("row exists").push(i);
        used += w;
    }
    rows
}

/// Lays out ranked items. `columns` is clamped to at least 1.
pub fn build_gallery(ranked: &[ScoredItem], style: GalleryStyle, columns: u32) -> MediaGallery {
    let columns = columns.max(1);
    let tile = |i: usize, row: u32, column: u32, width: u32| Tile {
        item: ranked[i].item.clone(),
        score: ranked[i].score,
        rank: i,
        row,
        column,
        width,
        height: 1,
    };
    let tiles = match style {
        GalleryStyle::StrictOrderEqualSize => {
            let mut order: Vec<usize> = (0..ranked.len()).collect();
            order.sort_by_key(|&i| (ranked[i].item.publication_date, i));
            order
                .into_iter()
                .enumerate()
                .map(|(pos, i)| tile(i, pos as u32 / columns, pos as u32 % columns, 1))
                .collect()
        }
        GalleryStyle::LooseOrderVaryingSize => {
            let widths: Vec<u32> = (0..ranked.len()).map(|i| class_width(size_class(ranked, i), columns)).collect();
            let plain = plain_rows(&widths, columns);
            let mut rows = plain.clone();
            // Backfill each row's gap from the items the plain pass put in
            // the next row, never emptying that row.
            for r in 0..rows.len().saturating_sub(1) {
                let mut gap = columns - rows[r].iter().map(|&i| widths[i]).sum::<u32>();
                for &i in &plain[r + 1] {
                    if gap == 0 || rows[r + 1].len() == 1 {
                        break;
                    }
                    if widths[i] <= gap {
                        if let Some(p) = rows[r + 1].iter().position(|&x| x == i) {
                            rows[r + 1].remove(p);
                            rows[r].push(i);
                            gap -= widths[i];
                        }
                    }
                }
            }
            let mut tiles = Vec::with_capacity(ranked.len());
            for (r, row) in rows.iter_mut().enumerate() {
                row.sort_unstable();
                let mut col = 0;
                for &i in row.iter() {
                    tiles.push(tile(i, r as u32, col, widths[i]));
                    col += widths[i];
                }
            }
            tiles.sort_by_key(|t| t.rank);
            tiles
        }
    };
    MediaGallery { style, columns, tiles }
}
