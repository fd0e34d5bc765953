// The 12-row golden CSV, inlined so the UI tests depend on the service only
// through its external interfaces.

export const GOLDEN_METADATA_CSV = `ID,NP,OP,OC,Y
1,OMORI,KU,Yoshikawa Lab.,2018
2,OMORI,KU,Yoshikawa Lab.,2019
3,YAMADA,kyoto univ.,kyoto univ.,2016
4,SUZUKI,Kyoto Univ.,Kyoto Univ.,2016
5,SUZUKI,Kyoto Univ.,Kyoto Univ.,2014
8,OMORI,KU,ylab,2016
12,KATO,KU,Tanaka Lab.,2013
13,KATO,KU,Tanaka Lab.,2014
20,OMORI,kyoto-u,ylab,2013
21,OMORI,kyoto-u,ylab,2014
34,OMORI,KU,ylab,2016
49,OMORI,KU,ylab,2015
`;
