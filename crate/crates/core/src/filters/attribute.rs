//! Attribute openings computed on a max-tree (8-connectivity).
//!
//! The tree is built with the union-find construction over pixels sorted by
//! decreasing value. Both attributes are increasing, so the direct filtering
//! rule is used: every pixel takes the level of its closest ancestor node
//! whose attribute reaches the threshold.

use crate::tensor::Band;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attribute {
    /// Pixel count of the connected component.
    Area,
    /// Euclidean diagonal of the component's bounding box, in pixels.
    BoxDiagonal,
}

#[derive(Debug, Clone, Copy)]
struct NodeStats {
    area: u64,
    min_r: u32,
    max_r: u32,
    min_c: u32,
    max_c: u32,
}

impl NodeStats {
    fn pixel(r: usize, c: usize) -> Self {
        NodeStats {
            area: 1,
            min_r: r as u32,
            max_r: r as u32,
            min_c: c as u32,
            max_c: c as u32,
        }
    }

    fn merge(&mut self, o: &NodeStats) {
        self.area += o.area;
        self.min_r = self.min_r.min(o.min_r);
        self.max_r = self.max_r.max(o.max_r);
        self.min_c = self.min_c.min(o.min_c);
        self.max_c = self.max_c.max(o.max_c);
    }

    fn value(&self, attr: Attribute) -> f64 {
        match attr {
            Attribute::Area => self.area as f64,
            Attribute::BoxDiagonal => {
                let dh = f64::from(self.max_r - self.min_r + 1);
                let dw = f64::from(self.max_c - self.min_c + 1);
                (dh * dh + dw * dw).sqrt()
            }
        }
    }
}

/// A max-tree over the pixels of a band. `parent` links every pixel to its
/// canonical node; `order` lists pixels by decreasing value.
#[derive(Debug, Clone)]
pub struct MaxTree {
    parent: Vec<usize>,
    order: Vec<usize>,
    stats: Vec<NodeStats>,
}

fn find_root(zpar: &mut [usize], mut x: usize) -> usize {
    let mut root = x;
    while zpar[root] != root {
        root = zpar[root];
    }
    while zpar[x] != root {
        let next = zpar[x];
        zpar[x] = root;
        x = next;
    }
    root
}

impl MaxTree {
    pub fn build(band: &Band) -> MaxTree {
        let (h, w) = band.shape();
        let f = band.values();
        let n = h * w;
        let mut order: Vec<usize> = (0..n).collect();
        // decreasing value, ties in raster order
        order.sort_by(|&a, &b| f[b].total_cmp(&f[a]).then(a.cmp(&b)));

        const UNSEEN: usize = usize::MAX;
        let mut parent = vec![UNSEEN; n];
        let mut zpar = vec![UNSEEN; n];
        let mut stats: Vec<NodeStats> = (0..n).map(|p| NodeStats::pixel(p / w, p % w)).collect();

        for &p in &order {
            parent[p] = p;
            zpar[p] = p;
            let (r, c) = ((p / w) as isize, (p % w) as isize);
            for dr in -1isize..=1 {
                for dc in -1isize..=1 {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (rr, cc) = (r + dr, c + dc);
                    if rr < 0 || cc < 0 || rr >= h as isize || cc >= w as isize {
                        continue;
                    }
                    let q = rr as usize * w + cc as usize;
                    if zpar[q] == UNSEEN {
                        continue;
                    }
                    let root = find_root(&mut zpar, q);
                    if root != p {
                        parent[root] = p;
                        zpar[root] = p;
                        let s = stats[root];
                        stats[p].merge(&s);
                    }
                }
            }
        }

        // canonicalize: point every pixel at the representative of its level component
        for &p in order.iter().rev() {
            let q = parent[p];
            if f[parent[q]] == f[q] {
                parent[p] = parent[q];
            }
        }
        MaxTree {
            parent,
            order,
            stats,
        }
    }

    fn is_canonical(&self, f: &[f32], p: usize) -> bool {
        let q = self.parent[p];
        q == p || f[q] != f[p]
    }

    /// Attribute opening of `band`, whose tree this is.
    pub fn filter(&self, band: &Band, attr: Attribute, threshold: f64) -> Band {
        let f = band.values();
        let mut out = vec![0f32; f.len()];
        for &p in self.order.iter().rev() {
            let q = self.parent[p];
            out[p] = if q == p {
                f[p]
            } else if self.is_canonical(f, p) {
                if self.stats[p].value(attr) >= threshold {
                    f[p]
                } else {
                    out[q]
                }
            } else {
                out[q]
            };
        }
        Band::from_filter(band.height(), band.width(), out)
    }

    /// Number of distinct nodes (canonical pixels).
    pub fn node_count(&self, band: &Band) -> usize {
        let f = band.values();
        (0..f.len()).filter(|&p| self.is_canonical(f, p)).count()
    }
}

pub fn attribute_filter(band: &Band, attr: Attribute, threshold: u32) -> Band {
    MaxTree::build(band).filter(band, attr, f64::from(threshold))
}

#[cfg(test)]
pub(crate) mod oracle {
    use super::Attribute;
    use crate::tensor::Band;

    /// Attribute opening by explicit decomposition into upper level sets
    /// and 8-connected component labeling at every gray level.
    pub fn level_set_opening(band: &Band, attr: Attribute, threshold: f64) -> Band {
        let (h, w) = band.shape();
        let f = band.values();
        let mut levels: Vec<f32> = f.to_vec();
        levels.sort_by(f32::total_cmp);
        levels.dedup();
        let floor = levels[0];
        let mut out = vec![floor; f.len()];
        for &t in &levels {
            let mut label = vec![usize::MAX; f.len()];
            for start in 0..f.len() {
                if f[start] < t || label[start] != usize::MAX {
                    continue;
                }
                let mut comp = vec![start];
                label[start] = start;
                let mut k = 0;
                while k < comp.len() {
                    let p = comp[k];
                    k += 1;
                    let (r, c) = ((p / w) as isize, (p % w) as isize);
                    for dr in -1isize..=1 {
                        for dc in -1isize..=1 {
                            let (rr, cc) = (r + dr, c + dc);
                            if rr < 0 || cc < 0 || rr >= h as isize || cc >= w as isize {
                                continue;
                            }
                            let q = rr as usize * w + cc as usize;
                            if f[q] >= t && label[q] == usize::MAX {
                                label[q] = start;
                                comp.push(q);
                            }
                        }
                    }
                }
                let rows = comp.iter().map(|p| p / w);
                let cols = comp.iter().map(|p| p % w);
                let dh = (rows.clone().max().unwrap() - rows.min().unwrap() + 1) as f64;
                let dw = (cols.clone().max().unwrap() - cols.min().unwrap() + 1) as f64;
                let value = match attr {
                    Attribute::Area => comp.len() as f64,
                    Attribute::BoxDiagonal => (dh * dh + dw * dw).sqrt(),
                };
                if value >= threshold {
                    for &p in &comp {
                        out[p] = out[p].max(t);
                    }
                }
            }
        }
        Band::new(h, w, out).unwrap()
    }
}
