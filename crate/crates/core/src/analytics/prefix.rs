//! Longest-prefix-match table over IPv4 CIDRs.

use std::collections::HashMap;
use std::net::Ipv4Addr;

use ipnet::Ipv4Net;

/// One hash map per prefix length, probed from /32 down to /0. Lengths that
/// hold no prefix are skipped via a bitmask.
#[derive(Debug, Clone)]
pub struct PrefixTable<T> {
    by_len: Vec<HashMap<u32, T>>,
    present: u64,
}

impl<T> Default for PrefixTable<T> {
    fn default() -> Self {
        Self {
            by_len: (0..=32).map(|_| HashMap::new()).collect(),
            present: 0,
        }
    }
}

impl<T> PrefixTable<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts `value` under `prefix` (host bits ignored). Returns the
    /// previous value stored under the same prefix.
    pub fn insert(&mut self, prefix: Ipv4Net, value: T) -> Option<T> {
        let len = prefix.prefix_len();
        self.present |= 1 << len;
        self.by_len[len as usize].insert(u32::from(prefix.network()), value)
    }

    pub fn get_exact(&self, prefix: Ipv4Net) -> Option<&T> {
        self.by_len[prefix.prefix_len() as usize].get(&u32::from(prefix.network()))
    }

    pub fn longest_match(&self, addr: Ipv4Addr) -> Option<(Ipv4Net, &T)> {
        let bits = u32::from(addr);
        for len in (0..=32u8).rev() {
            if self.present & (1 << len) == 0 {
                continue;
            }
            let masked = if len == 0 {
                0
            } else {
                bits & (u32::MAX << (32 - len))
            };
            if let Some(v) = self.by_len[len as usize].get(&masked) {
                let net = Ipv4Net::new(Ipv4Addr::from(masked), len).expect("len <= 32");
                return Some((net, v));
            }
        }
        None
    }

    /// Every stored prefix containing `addr`, longest first.
    pub fn all_matches(&self, addr: Ipv4Addr) -> impl Iterator<Item = (Ipv4Net, &T)> {
        let bits = u32::from(addr);
        (0..=32u8).rev().filter_map(move |len| {
            if self.present & (1 << len) == 0 {
                return None;
            }
            let masked = if len == 0 {
                0
            } else {
                bits & (u32::MAX << (32 - len))
            };
            self.by_len[len as usize].get(&masked).map(|v| {
                (
                    Ipv4Net::new(Ipv4Addr::from(masked), len).expect("len <= 32"),
                    v,
                )
            })
        })
    }

    pub fn len(&self) -> usize {
        self.by_len.iter().map(HashMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(s: &str) -> Ipv4Net {
        s.parse().unwrap()
    }

    #[test]
    fn picks_the_most_specific_prefix() {
        let mut t = PrefixTable::new();
        t.insert(net("10.0.0.0/8"), "wide");
        t.insert(net("10.1.0.0/16"), "mid");
        t.insert(net("10.1.2.3/32"), "host");
        t.insert(net("0.0.0.0/0"), "default");

        assert_eq!(
            t.longest_match("10.1.2.3".parse().unwrap()).unwrap().1,
            &"host"
        );
        assert_eq!(
            t.longest_match("10.1.9.9".parse().unwrap()).unwrap().1,
            &"mid"
        );
        assert_eq!(
            t.longest_match("10.9.9.9".parse().unwrap()).unwrap().1,
            &"wide"
        );
        assert_eq!(
            t.longest_match("192.0.2.1".parse().unwrap()).unwrap().1,
            &"default"
        );
        let all: Vec<_> = t
            .all_matches("10.1.2.3".parse().unwrap())
            .map(|(_, v)| *v)
            .collect();
        assert_eq!(all, vec!["host", "mid", "wide", "default"]);
        assert_eq!(t.len(), 4);
    }

    #[test]
    fn host_bits_are_ignored_and_misses_are_none() {
        let mut t = PrefixTable::new();
        t.insert(net("192.0.2.77/24"), 1);
        assert_eq!(t.get_exact(net("192.0.2.0/24")), Some(&1));
        assert!(t.longest_match("192.0.3.1".parse().unwrap()).is_none());
    }
}
